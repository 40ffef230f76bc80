//! Backward dynamic program selecting the minimum expected cost plan from a
//! tree of RRTs.
//!
//! The value of a level depends on the observation history only through
//! the unnormalized belief the history produces, so every sub-problem is
//! keyed by `(level, v)`. At each sub-problem the team either stops in the
//! current level's trees (each agent picks its best end node on its own,
//! since costs add over agents) or walks to a joint observation node and
//! continues, for each possible observation, in the child level.

use std::collections::VecDeque;
use std::rc::Rc;

use crate::cost::{stage_cost, terminal_cost, CostParams, Observer, PlanBranch, PlanTree};
use crate::environment::{BeliefVector, EnvModel, UnnormalizedBelief};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::morrt::MorrtTree;
use crate::multi_rrt::MultiRrt;
use crate::rrt::AgentTree;

/// Beliefs closer than this are treated as the same sub-problem.
pub const BELIEF_MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct NoBranchChoice {
    pub nodes: Vec<usize>,
    pub cost: f64,
}

#[derive(Clone, Debug)]
pub enum Action {
    NoBranch(NoBranchChoice),
    Branch {
        joint: usize,
        /// Weighted stage cost of reaching the joint node.
        approach_cost: f64,
        /// Continuations indexed by observation.
        children: Vec<Rc<DpEntry>>,
    },
}

#[derive(Clone, Debug)]
pub struct DpEntry {
    pub level: usize,
    pub entry_v: UnnormalizedBelief,
    pub best_cost: f64,
    pub action: Action,
}

/// Per-node cumulative stage cost from the root, one value per state.
fn cumulative_stage_costs(tree: &AgentTree, g: usize, costs: &CostParams) -> Vec<Vec<f64>> {
    let mut cum: Vec<Vec<f64>> = Vec::with_capacity(tree.len());
    for n in tree.nodes() {
        let row = match n.parent {
            None => vec![0.0; g],
            Some(p) => {
                let from = tree.node(p).position;
                let dx = n.position - from;
                (0..g)
                    .map(|e| cum[p][e] + stage_cost(from, dx, e, costs))
                    .collect()
            }
        };
        cum.push(row);
    }
    cum
}

struct LevelCosts {
    /// `[agent][node][e]`
    stage: Vec<Vec<Vec<f64>>>,
    /// `[node][e]` terminal cost per agent: `[agent][node][e]`
    terminal: Vec<Vec<Vec<f64>>>,
    /// `[joint][e]` stage cost to reach each joint node, summed over agents.
    approach: Vec<Vec<f64>>,
}

impl LevelCosts {
    fn new(multi: &MultiRrt, g: usize, costs: &CostParams) -> Self {
        let stage: Vec<_> = multi
            .trees
            .iter()
            .map(|t| cumulative_stage_costs(t, g, costs))
            .collect();
        let terminal = multi
            .trees
            .iter()
            .map(|t| {
                t.nodes()
                    .iter()
                    .map(|n| {
                        (0..g)
                            .map(|e| terminal_cost(n.position, e, costs))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let approach = multi
            .joint_obs_nodes
            .iter()
            .map(|j| {
                (0..g)
                    .map(|e| {
                        multi
                            .trees
                            .iter()
                            .enumerate()
                            .map(|(a, t)| {
                                let n = j.per_agent[a];
                                let node = t.node(n);
                                let pad = j.path_length_edges - node.depth;
                                let wait = stage_cost(node.position, Point2::default(), e, costs);
                                stage[a][n][e] + pad as f64 * wait
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Self {
            stage,
            terminal,
            approach,
        }
    }

    fn no_branch(&self, v: &UnnormalizedBelief) -> NoBranchChoice {
        let mut nodes = Vec::with_capacity(self.stage.len());
        let mut total = 0.0;
        for (stage, terminal) in self.stage.iter().zip(&self.terminal) {
            let mut best = 0;
            let mut best_c = f64::INFINITY;
            for n in 0..stage.len() {
                let c: f64 =
                    v.0.iter()
                        .enumerate()
                        .map(|(e, w)| w * (stage[n][e] + terminal[n][e]))
                        .sum();
                if c < best_c {
                    best = n;
                    best_c = c;
                }
            }
            nodes.push(best);
            total += best_c;
        }
        NoBranchChoice { nodes, cost: total }
    }

    fn approach_cost(&self, j: usize, v: &UnnormalizedBelief) -> f64 {
        v.0.iter().zip(&self.approach[j]).map(|(w, c)| w * c).sum()
    }
}

/// Best end node per agent when the team stops in `multi`'s trees.
pub fn best_no_branch(
    multi: &MultiRrt,
    v: &UnnormalizedBelief,
    costs: &CostParams,
) -> NoBranchChoice {
    LevelCosts::new(multi, v.0.len(), costs).no_branch(v)
}

fn prefer_branch(branch: f64, no_branch: f64) -> bool {
    branch < no_branch - BELIEF_MERGE_TOLERANCE * (1.0 + no_branch.abs())
}

struct Solver<'a> {
    morrt: &'a MorrtTree,
    env: &'a EnvModel,
    levels: Vec<LevelCosts>,
    memo: Vec<Vec<Rc<DpEntry>>>,
    evaluations: usize,
}

impl<'a> Solver<'a> {
    fn new(morrt: &'a MorrtTree, env: &'a EnvModel, costs: &CostParams) -> Self {
        let g = env.num_states();
        Self {
            morrt,
            env,
            levels: morrt
                .levels
                .iter()
                .map(|l| LevelCosts::new(&l.multi, g, costs))
                .collect(),
            memo: vec![Vec::new(); morrt.levels.len()],
            evaluations: 0,
        }
    }

    fn solve(&mut self, level: usize, v: &UnnormalizedBelief) -> Result<Rc<DpEntry>> {
        if let Some(hit) = self.memo[level]
            .iter()
            .find(|e| e.entry_v.approx_eq(v, BELIEF_MERGE_TOLERANCE))
        {
            return Ok(Rc::clone(hit));
        }
        self.evaluations += 1;
        let stop = self.levels[level].no_branch(v);
        let mut best_cost = stop.cost;
        let mut action = Action::NoBranch(stop);

        let lvl = self.morrt.level(level);
        for (j, &child) in lvl.children.iter().enumerate() {
            let joint = &lvl.multi.joint_obs_nodes[j];
            let x = joint.observing_position(&lvl.multi.trees);
            let approach_cost = self.levels[level].approach_cost(j, v);
            let mut cost = approach_cost;
            let mut children = Vec::with_capacity(self.env.num_observations());
            for o in 0..self.env.num_observations() {
                let child_v = self.env.theta_matrix(o, x)?.apply(v);
                let sub = self.solve(child, &child_v)?;
                cost += sub.best_cost;
                children.push(sub);
            }
            let beats = match action {
                Action::NoBranch(_) => prefer_branch(cost, best_cost),
                Action::Branch { .. } => cost < best_cost,
            };
            if beats {
                best_cost = cost;
                action = Action::Branch {
                    joint: j,
                    approach_cost,
                    children,
                };
            }
        }
        let entry = Rc::new(DpEntry {
            level,
            entry_v: v.clone(),
            best_cost,
            action,
        });
        self.memo[level].push(Rc::clone(&entry));
        Ok(entry)
    }
}

#[derive(Clone, Debug)]
pub struct PlanSolution {
    pub plan: PlanTree,
    pub expected_cost: f64,
    pub root: Rc<DpEntry>,
    /// Distinct `(level, belief)` sub-problems solved.
    pub subproblems: usize,
}

fn pad_paths(mut paths: Vec<Vec<Point2>>) -> Vec<Vec<Point2>> {
    let n = paths.iter().map(Vec::len).max().unwrap_or(1);
    for p in &mut paths {
        let last = *p.last().expect("paths are nonempty");
        p.resize(n, last);
    }
    paths
}

/// Materializes the plan chosen by a solved root entry. Branch ids are
/// assigned breadth-first, children in observation order.
pub fn assemble_plan(morrt: &MorrtTree, root: &Rc<DpEntry>) -> PlanTree {
    let mut branches: Vec<PlanBranch> = Vec::new();
    let mut queue: VecDeque<(Rc<DpEntry>, Option<usize>, Option<usize>)> = VecDeque::new();
    queue.push_back((Rc::clone(root), None, None));
    let mut next_id = 1;
    while let Some((entry, parent, observation)) = queue.pop_front() {
        let id = branches.len();
        let lvl = morrt.level(entry.level);
        let trees = &lvl.multi.trees;
        let branch = match &entry.action {
            Action::NoBranch(choice) => PlanBranch {
                id,
                parent,
                observation,
                waypoints: pad_paths(
                    choice
                        .nodes
                        .iter()
                        .zip(trees)
                        .map(|(&n, t)| t.path_to_node(n))
                        .collect(),
                ),
                v: entry.entry_v.clone(),
                ends_with_observation: false,
                observer: None,
                children: vec![],
            },
            Action::Branch {
                joint, children, ..
            } => {
                let jn = &lvl.multi.joint_obs_nodes[*joint];
                let ids: Vec<usize> = (next_id..next_id + children.len()).collect();
                next_id += children.len();
                for (o, c) in children.iter().enumerate() {
                    queue.push_back((Rc::clone(c), Some(id), Some(o)));
                }
                PlanBranch {
                    id,
                    parent,
                    observation,
                    waypoints: (0..trees.len()).map(|a| jn.agent_path(trees, a)).collect(),
                    v: entry.entry_v.clone(),
                    ends_with_observation: true,
                    observer: Some(Observer {
                        agent: jn.observer,
                        area: jn.area,
                    }),
                    children: ids,
                }
            }
        };
        branches.push(branch);
    }
    PlanTree { branches }
}

/// Minimum expected cost plan over every contingent plan the tree of RRTs
/// can express.
pub fn best_plan(
    morrt: &MorrtTree,
    env: &EnvModel,
    b0: &BeliefVector,
    costs: &CostParams,
) -> Result<PlanSolution> {
    if b0.len() != env.num_states() {
        return Err(Error::InvalidIndex(
            "initial belief dimension differs from the state count".into(),
        ));
    }
    let mut solver = Solver::new(morrt, env, costs);
    let root = solver.solve(0, &b0.to_unnormalized())?;
    let plan = assemble_plan(morrt, &root);
    Ok(PlanSolution {
        expected_cost: root.best_cost,
        subproblems: solver.evaluations,
        plan,
        root,
    })
}

/// Recomputes every branch weight from `b0` down the plan.
pub fn realize_branch_weights(
    plan: &PlanTree,
    env: &EnvModel,
    b0: &BeliefVector,
) -> Result<PlanTree> {
    let mut out = plan.clone();
    if out.branches.is_empty() {
        return Ok(out);
    }
    out.branches[0].v = b0.to_unnormalized();
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        let b = &out.branches[i];
        if !b.ends_with_observation {
            continue;
        }
        let x = b
            .observing_position()
            .ok_or_else(|| Error::PlanIntegrity(format!("branch {i} has no observer")))?;
        let parent_v = b.v.clone();
        for (o, &c) in b.children.clone().iter().enumerate() {
            out.branches[c].v = env.theta_matrix(o, x)?.apply(&parent_v);
            stack.push(c);
        }
    }
    Ok(out)
}

/// Best cost when observations are ignored: the team follows one path,
/// possibly through child levels, regardless of what it observes.
pub fn best_observation_blind_cost(
    morrt: &MorrtTree,
    b0: &BeliefVector,
    costs: &CostParams,
) -> f64 {
    let g = b0.len();
    let v = b0.to_unnormalized();
    let levels: Vec<LevelCosts> = morrt
        .levels
        .iter()
        .map(|l| LevelCosts::new(&l.multi, g, costs))
        .collect();
    fn go(morrt: &MorrtTree, levels: &[LevelCosts], level: usize, v: &UnnormalizedBelief) -> f64 {
        let mut best = levels[level].no_branch(v).cost;
        for (j, &child) in morrt.level(level).children.iter().enumerate() {
            best = best.min(levels[level].approach_cost(j, v) + go(morrt, levels, child, v));
        }
        best
    }
    go(morrt, &levels, 0, &v)
}
