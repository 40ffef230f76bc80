#![allow(dead_code)]

use std::path::PathBuf;

use morrt_core::cost::{Observer, PlanBranch};
use morrt_core::io::load_scenario;
use morrt_core::{
    Agent, BeliefVector, CostParams, EnvModel, MorrtParams, MorrtTree, PlanTree, Point2, Rect,
    Region, Scenario, UnnormalizedBelief, Workspace,
};
use rand::Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.toml"))
}

pub fn fixture(name: &str) -> Scenario {
    load_scenario(fixture_path(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn with_seed(s: &Scenario, seed: u64) -> Scenario {
    let mut s = s.clone();
    s.params.seed = seed;
    s
}

/// Small open-world instances for exhaustive cross-checks.
///
/// Variants cycle through one agent with one area, one agent with two
/// areas, and two agents with two areas.
pub fn tiny_instance(i: u64) -> Scenario {
    let goals = vec![Point2::new(0.5, 4.5), Point2::new(4.5, 4.5)];
    let ws = Workspace::new(
        Rect::new(Point2::new(0.0, 0.0), Point2::new(5.0, 5.0)),
        vec![],
    );
    let wide = Region::rect(Point2::new(1.0, 1.5), Point2::new(4.0, 2.5));
    let left = Region::rect(Point2::new(0.0, 1.5), Point2::new(2.2, 2.5));
    let right = Region::rect(Point2::new(2.8, 1.5), Point2::new(5.0, 2.5));
    let (agents, areas, n_obs, k) = match i % 3 {
        0 => (1, vec![wide], 2, 30),
        1 => (1, vec![left, right], 2, 20),
        _ => (2, vec![left, right], 1, 10),
    };
    let accuracy = [0.8, 0.7, 0.9][(i / 3 % 3) as usize];
    Scenario {
        name: format!("tiny-{i}"),
        agents: (0..agents)
            .map(|a| Agent {
                name: format!("a{a}"),
                start: Point2::new(2.2 + 0.6 * a as f64, 0.5),
                workspace: ws.clone(),
            })
            .collect(),
        env: EnvModel::new(goals.clone(), areas, accuracy).unwrap(),
        initial_belief: BeliefVector::uniform(2),
        params: MorrtParams {
            n_obs,
            k,
            step: 1.0,
            seed: i,
            max_iterations: None,
            goal_bias: 0.0,
        },
        costs: CostParams::new(1.0, 1.0, goals),
    }
}

/// Environment used for randomly generated plans.
pub fn random_plan_env(accuracy: f64) -> EnvModel {
    EnvModel::new(
        vec![Point2::new(0.0, 5.0), Point2::new(5.0, 5.0)],
        vec![
            Region::rect(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)),
            Region::disk(Point2::new(4.0, 1.0), 0.8),
        ],
        accuracy,
    )
    .unwrap()
}

fn random_point<R: Rng>(rng: &mut R) -> Point2 {
    Point2::new(rng.gen_range(-1.0..6.0), rng.gen_range(-1.0..6.0))
}

fn point_in_area<R: Rng>(rng: &mut R, area: &Region) -> Point2 {
    let b = area.bounding_rect();
    loop {
        let p = b.sample(rng);
        if area.contains(p) {
            return p;
        }
    }
}

/// A random valid plan of observation depth at most `max_depth` over
/// `random_plan_env`.
pub fn random_plan<R: Rng>(
    rng: &mut R,
    env: &EnvModel,
    b0: &BeliefVector,
    agents: usize,
    max_depth: usize,
) -> PlanTree {
    struct Pending {
        parent: Option<usize>,
        observation: Option<usize>,
        starts: Vec<Point2>,
        v: UnnormalizedBelief,
        depth: usize,
    }
    let mut branches: Vec<PlanBranch> = Vec::new();
    let mut queue = std::collections::VecDeque::from([Pending {
        parent: None,
        observation: None,
        starts: (0..agents).map(|_| random_point(rng)).collect(),
        v: b0.to_unnormalized(),
        depth: 0,
    }]);
    let mut next_id = 1;
    while let Some(p) = queue.pop_front() {
        let id = branches.len();
        let steps = rng.gen_range(0..4);
        let mut waypoints: Vec<Vec<Point2>> = p
            .starts
            .iter()
            .map(|&s| {
                let mut w = vec![s];
                w.extend((0..steps).map(|_| random_point(rng)));
                w
            })
            .collect();
        let observes = p.depth < max_depth && rng.gen_bool(0.7);
        let mut observer = None;
        let mut children = vec![];
        if observes {
            let agent = rng.gen_range(0..agents);
            let area = rng.gen_range(0..env.num_areas());
            let x = point_in_area(rng, &env.observation_areas[area]);
            for w in &mut waypoints {
                // keep lengths equal
                let last = *w.last().unwrap();
                w.push(last);
            }
            *waypoints[agent].last_mut().unwrap() = x;
            observer = Some(Observer { agent, area });
            let ends: Vec<Point2> = waypoints.iter().map(|w| *w.last().unwrap()).collect();
            for o in 0..env.num_observations() {
                let v = env.theta_matrix(o, x).unwrap().apply(&p.v);
                children.push(next_id);
                next_id += 1;
                queue.push_back(Pending {
                    parent: Some(id),
                    observation: Some(o),
                    starts: ends.clone(),
                    v,
                    depth: p.depth + 1,
                });
            }
        }
        branches.push(PlanBranch {
            id,
            parent: p.parent,
            observation: p.observation,
            waypoints,
            v: p.v,
            ends_with_observation: observes,
            observer,
            children,
        });
    }
    PlanTree { branches }
}

/// Every waypoint free and every segment collision-free in the agent's
/// own workspace.
pub fn check_plan_safety(plan: &PlanTree, scenario: &Scenario) -> Result<(), String> {
    for b in &plan.branches {
        for (a, w) in b.waypoints.iter().enumerate() {
            let ws = &scenario.agents[a].workspace;
            for p in w {
                if !ws.is_free(*p) {
                    return Err(format!(
                        "branch {} agent {a}: waypoint ({}, {}) not free",
                        b.id, p.x, p.y
                    ));
                }
            }
            for s in w.windows(2) {
                if !ws.segment_is_free(s[0], s[1]) {
                    return Err(format!("branch {} agent {a}: segment collides", b.id));
                }
            }
        }
    }
    Ok(())
}

/// Joint nodes share one edge count: the observer sits exactly at it and
/// every other agent at most at it.
pub fn check_equal_edge_counts(morrt: &MorrtTree) -> Result<usize, String> {
    let mut checked = 0;
    for (li, level) in morrt.levels.iter().enumerate() {
        let trees = &level.multi.trees;
        for (j, node) in level.multi.joint_obs_nodes.iter().enumerate() {
            let l = node.path_length_edges;
            if trees[node.observer]
                .node(node.per_agent[node.observer])
                .depth
                != l
            {
                return Err(format!("level {li} joint {j}: observer not at depth {l}"));
            }
            for a in 0..trees.len() {
                let path = node.agent_path(trees, a);
                if path.len() != l + 1 || trees[a].node(node.per_agent[a]).depth > l {
                    return Err(format!(
                        "level {li} joint {j}: agent {a} path has {} edges",
                        path.len() - 1
                    ));
                }
            }
            if !level.multi.joint_obs_nodes[..j].iter().all(|o| o != node) {
                return Err(format!("level {li} joint {j}: duplicate"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}
