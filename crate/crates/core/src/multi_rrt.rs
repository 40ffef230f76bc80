//! One level of the tree of RRTs: a tree per agent plus the joint
//! observation nodes the team can branch at.

use std::collections::{BTreeMap, BTreeSet};

use crate::cost::CostParams;
use crate::environment::UnnormalizedBelief;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::morrt::MorrtParams;
use crate::rrt::{
    cost_heuristic, AgentTree, GrowthContext, ObservationNodeRecord, ITERATIONS_PER_REQUEST,
};
use crate::scenario::Scenario;

/// A team configuration at which one shared observation is made.
///
/// `per_agent[a]` indexes agent `a`'s tree. The observer's node sits at
/// exactly `path_length_edges` edges from its root; any other agent is at
/// that depth or shallower, in which case it waits at its node.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JointObservationNode {
    pub per_agent: Vec<usize>,
    pub observer: usize,
    pub area: usize,
    pub path_length_edges: usize,
}

impl JointObservationNode {
    /// Agent `a`'s waypoints to this node, padded with waiting steps to
    /// `path_length_edges + 1` entries.
    pub fn agent_path(&self, trees: &[AgentTree], a: usize) -> Vec<Point2> {
        let mut path = trees[a].path_to_node(self.per_agent[a]);
        let last = *path.last().expect("paths are nonempty");
        path.resize(self.path_length_edges + 1, last);
        path
    }

    pub fn positions(&self, trees: &[AgentTree]) -> Vec<Point2> {
        self.per_agent
            .iter()
            .zip(trees)
            .map(|(&n, t)| t.node(n).position)
            .collect()
    }

    pub fn observing_position(&self, trees: &[AgentTree]) -> Point2 {
        trees[self.observer]
            .node(self.per_agent[self.observer])
            .position
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiRrt {
    pub trees: Vec<AgentTree>,
    pub joint_obs_nodes: Vec<JointObservationNode>,
    pub explored_areas_before: BTreeSet<usize>,
    /// Belief used to rank observation-node candidates at this level.
    pub entry_belief: UnnormalizedBelief,
}

impl MultiRrt {
    pub fn num_agents(&self) -> usize {
        self.trees.len()
    }

    pub fn starts(&self) -> Vec<Point2> {
        self.trees.iter().map(AgentTree::start).collect()
    }
}

/// Grows one tree per agent and forms the level's joint observation nodes.
///
/// Errors are [`Error::Growth`] with the failing agent; depth and branch
/// are left for the caller to fill in.
pub fn build_multi_rrt(
    starts: &[Point2],
    scenario: &Scenario,
    unexplored: &BTreeSet<usize>,
    params: &MorrtParams,
    seeds: &[u64],
    entry_belief: UnnormalizedBelief,
) -> Result<MultiRrt> {
    assert_eq!(starts.len(), scenario.num_agents());
    assert_eq!(seeds.len(), starts.len());
    let mut trees = Vec::with_capacity(starts.len());
    for (a, (&start, agent)) in starts.iter().zip(&scenario.agents).enumerate() {
        let ctx = GrowthContext {
            workspace: &agent.workspace,
            areas: &scenario.env.observation_areas,
            goals: &scenario.env.goal_nodes,
            goal_bias: params.goal_bias,
        };
        let mut tree = AgentTree::new(start, params.step, seeds[a]);
        let grown = if unexplored.is_empty() {
            let budget = params
                .max_iterations
                .unwrap_or(ITERATIONS_PER_REQUEST * params.k);
            tree.grow_until_size(&ctx, params.k, budget)
        } else {
            let budget = params
                .max_iterations
                .unwrap_or(ITERATIONS_PER_REQUEST * params.n_obs);
            tree.grow_until_observations(&ctx, unexplored, params.n_obs, budget)
                .map(|_| ())
        };
        grown.map_err(|e| Error::Growth {
            depth: 0,
            branch: vec![],
            agent: a,
            source: Box::new(e),
        })?;
        trees.push(tree);
    }
    let all_areas: BTreeSet<usize> = (0..scenario.env.num_areas()).collect();
    let explored_areas_before = all_areas.difference(unexplored).copied().collect();
    let joint_obs_nodes = if unexplored.is_empty() {
        Vec::new()
    } else {
        let candidates = filter_candidates(&trees, &entry_belief, &scenario.costs);
        shorten_paths(&joint_observation_nodes(&candidates), &trees)
    };
    Ok(MultiRrt {
        trees,
        joint_obs_nodes,
        explored_areas_before,
        entry_belief,
    })
}

/// Keeps, per agent and area, the observation node with the lowest cost
/// heuristic. A single agent keeps all of them.
pub fn filter_candidates(
    trees: &[AgentTree],
    v: &UnnormalizedBelief,
    costs: &CostParams,
) -> Vec<Vec<ObservationNodeRecord>> {
    if trees.len() == 1 {
        return vec![trees[0].observation_records()];
    }
    trees
        .iter()
        .map(|tree| {
            let mut best: BTreeMap<usize, (f64, ObservationNodeRecord)> = BTreeMap::new();
            for rec in tree.observation_records() {
                let h = cost_heuristic(&tree.path_to_node(rec.node), v, costs);
                // records arrive in node order, so strict < keeps the lower index on ties
                match best.get(&rec.area) {
                    Some((bh, _)) if *bh <= h => {}
                    _ => {
                        best.insert(rec.area, (h, rec));
                    }
                }
            }
            best.into_values().map(|(_, r)| r).collect()
        })
        .collect()
}

/// Outer product of per-agent candidates.
///
/// Each tuple yields one joint node per distinct area recorded in it; when
/// several agents record the same area, the lowest agent index observes.
/// Nodes are returned unshortened.
pub fn joint_observation_nodes(
    candidates: &[Vec<ObservationNodeRecord>],
) -> Vec<JointObservationNode> {
    if candidates.is_empty() || candidates.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let m = candidates.len();
    let mut out = Vec::new();
    let mut idx = vec![0usize; m];
    loop {
        let tuple: Vec<&ObservationNodeRecord> = idx
            .iter()
            .enumerate()
            .map(|(a, &i)| &candidates[a][i])
            .collect();
        let mut observers: BTreeMap<usize, usize> = BTreeMap::new();
        for (a, rec) in tuple.iter().enumerate() {
            observers.entry(rec.area).or_insert(a);
        }
        for (area, observer) in observers {
            out.push(JointObservationNode {
                per_agent: tuple.iter().map(|r| r.node).collect(),
                observer,
                area,
                path_length_edges: tuple[observer].path_length_edges,
            });
        }
        // odometer, last agent fastest
        let mut a = m;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < candidates[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// Equalizes edge counts at the observer's path length.
///
/// Agents with longer paths are cut back to their ancestor at that depth;
/// agents with shorter paths keep their node and wait there. Duplicates
/// produced by the cut are dropped, keeping first occurrences.
pub fn shorten_paths(
    joint: &[JointObservationNode],
    trees: &[AgentTree],
) -> Vec<JointObservationNode> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(joint.len());
    for j in joint {
        let l = trees[j.observer].node(j.per_agent[j.observer]).depth;
        let per_agent: Vec<usize> = j
            .per_agent
            .iter()
            .enumerate()
            .map(|(a, &n)| {
                if a == j.observer {
                    n
                } else {
                    trees[a].ancestor_at_depth(n, l)
                }
            })
            .collect();
        let node = JointObservationNode {
            per_agent,
            observer: j.observer,
            area: j.area,
            path_length_edges: l,
        };
        if seen.insert((node.per_agent.clone(), node.observer, node.area)) {
            out.push(node);
        }
    }
    out
}
