//! Exhaustive reference solver for small instances.
//!
//! Every contingent plan a tree of RRTs can express is a branch skeleton
//! (which histories observe, and at which joint node) together with one end
//! node per agent for every leaf history. The oracle enumerates all
//! skeletons and, for each leaf, all end-node tuples, and scores plans as a
//! direct expectation over realizations: for every hidden state and every
//! full observation vector, the probability of that pair times the cost of
//! the path actually driven. It never uses branch weights.

use crate::cost::{stage_cost, terminal_cost, CostParams, Observer, PlanBranch, PlanTree};
use crate::environment::{BeliefVector, EnvModel, UnnormalizedBelief};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::morrt::MorrtTree;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleLimits {
    pub max_nodes: usize,
    pub max_depth: usize,
    /// Maximum number of end-node tuples scored across all skeletons.
    pub budget: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_nodes: 5_000,
            max_depth: 4,
            budget: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EnumeratedPlan {
    Stop {
        level: usize,
        nodes: Vec<usize>,
    },
    Observe {
        level: usize,
        joint: usize,
        continuations: Vec<EnumeratedPlan>,
    },
}

#[derive(Clone, Debug)]
enum Skeleton {
    Stop(usize),
    Observe(usize, usize, Vec<Skeleton>),
}

fn path_cost(path: &[Point2], e: usize, costs: &CostParams) -> f64 {
    let mut c = 0.0;
    for w in path.windows(2) {
        c += stage_cost(w[0], w[1] - w[0], e, costs);
    }
    c
}

/// Appends `next` to `path`, dropping the shared junction point.
fn concat(path: &[Point2], next: &[Point2]) -> Vec<Point2> {
    let mut out = path.to_vec();
    out.extend_from_slice(if out.is_empty() { next } else { &next[1..] });
    out
}

/// Probability of observing `history` when the hidden state is `e`.
fn history_likelihood(env: &EnvModel, e: usize, history: &[(usize, Point2)]) -> Result<f64> {
    let mut p = 1.0;
    for &(o, x) in history {
        p *= env.observation_likelihood(e, o, x)?;
    }
    Ok(p)
}

struct Enumerator<'a> {
    morrt: &'a MorrtTree,
    env: &'a EnvModel,
    b0: &'a BeliefVector,
    costs: &'a CostParams,
}

impl Enumerator<'_> {
    fn skeletons(&self, level: usize) -> Vec<Skeleton> {
        let mut out = vec![Skeleton::Stop(level)];
        let g = self.env.num_observations();
        for (j, &child) in self.morrt.level(level).children.iter().enumerate() {
            let subs = self.skeletons(child);
            // every assignment of a child skeleton to each observation
            let mut idx = vec![0usize; g];
            loop {
                out.push(Skeleton::Observe(
                    level,
                    j,
                    idx.iter().map(|&i| subs[i].clone()).collect(),
                ));
                let mut k = g;
                let mut done = true;
                while k > 0 {
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < subs.len() {
                        done = false;
                        break;
                    }
                    idx[k] = 0;
                }
                if done {
                    break;
                }
            }
        }
        out
    }

    /// `(skeleton count, tuple evaluations)` for the subtree at `level`.
    fn counts(&self, level: usize) -> (f64, f64) {
        let lvl = self.morrt.level(level);
        let tuples: f64 = lvl.multi.trees.iter().map(|t| t.len() as f64).product();
        let g = self.env.num_observations() as i32;
        let mut skeletons = 1.0;
        let mut evals = tuples;
        for &child in &lvl.children {
            let (s, e) = self.counts(child);
            skeletons += s.powi(g);
            evals += g as f64 * s.powi(g - 1) * e;
        }
        (skeletons, evals)
    }

    /// Best total over leaves of one skeleton, given the history and the
    /// per-agent path driven so far.
    fn score(
        &self,
        sk: &Skeleton,
        history: &mut Vec<(usize, Point2)>,
        prefix: &[Vec<Point2>],
    ) -> Result<(f64, EnumeratedPlan)> {
        match sk {
            Skeleton::Stop(level) => self.score_leaf(*level, history, prefix),
            Skeleton::Observe(level, j, subs) => {
                let lvl = self.morrt.level(*level);
                let joint = &lvl.multi.joint_obs_nodes[*j];
                let trees = &lvl.multi.trees;
                let next: Vec<Vec<Point2>> = (0..trees.len())
                    .map(|a| concat(&prefix[a], &joint.agent_path(trees, a)))
                    .collect();
                let x = joint.observing_position(trees);
                let mut total = 0.0;
                let mut continuations = Vec::with_capacity(subs.len());
                for (o, sub) in subs.iter().enumerate() {
                    history.push((o, x));
                    let (c, plan) = self.score(sub, history, &next)?;
                    history.pop();
                    total += c;
                    continuations.push(plan);
                }
                Ok((
                    total,
                    EnumeratedPlan::Observe {
                        level: *level,
                        joint: *j,
                        continuations,
                    },
                ))
            }
        }
    }

    fn score_leaf(
        &self,
        level: usize,
        history: &[(usize, Point2)],
        prefix: &[Vec<Point2>],
    ) -> Result<(f64, EnumeratedPlan)> {
        let g = self.env.num_states();
        let weight: Vec<f64> = (0..g)
            .map(|e| Ok(self.b0.probs()[e] * history_likelihood(self.env, e, history)?))
            .collect::<Result<_>>()?;
        let trees = &self.morrt.level(level).multi.trees;
        // realized cost of each agent ending at each node, per state
        let realized: Vec<Vec<Vec<f64>>> = trees
            .iter()
            .enumerate()
            .map(|(a, t)| {
                (0..t.len())
                    .map(|n| {
                        let full = concat(&prefix[a], &t.path_to_node(n));
                        let end = *full.last().unwrap();
                        (0..g)
                            .map(|e| {
                                path_cost(&full, e, self.costs) + terminal_cost(end, e, self.costs)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let m = trees.len();
        let mut idx = vec![0usize; m];
        let mut best = f64::INFINITY;
        let mut best_idx = idx.clone();
        loop {
            let mut c = 0.0;
            for (e, w) in weight.iter().enumerate() {
                let mut team = 0.0;
                for a in 0..m {
                    team += realized[a][idx[a]][e];
                }
                c += w * team;
            }
            if c < best {
                best = c;
                best_idx = idx.clone();
            }
            let mut a = m;
            let mut done = true;
            while a > 0 {
                a -= 1;
                idx[a] += 1;
                if idx[a] < trees[a].len() {
                    done = false;
                    break;
                }
                idx[a] = 0;
            }
            if done {
                break;
            }
        }
        Ok((
            best,
            EnumeratedPlan::Stop {
                level,
                nodes: best_idx,
            },
        ))
    }
}

/// Exact minimum over all contingent plans expressible in `morrt`.
pub fn enumerate_best(
    morrt: &MorrtTree,
    env: &EnvModel,
    b0: &BeliefVector,
    costs: &CostParams,
    limits: OracleLimits,
) -> Result<(f64, EnumeratedPlan)> {
    if morrt.depth() > limits.max_depth {
        return Err(Error::OracleTooLarge(format!(
            "depth {} exceeds {}",
            morrt.depth(),
            limits.max_depth
        )));
    }
    if let Some(t) = morrt
        .levels
        .iter()
        .flat_map(|l| l.multi.trees.iter())
        .find(|t| t.len() > limits.max_nodes)
    {
        return Err(Error::OracleTooLarge(format!(
            "a tree has {} nodes, limit {}",
            t.len(),
            limits.max_nodes
        )));
    }
    let en = Enumerator {
        morrt,
        env,
        b0,
        costs,
    };
    let (skeletons, evals) = en.counts(0);
    if evals > limits.budget as f64 {
        return Err(Error::OracleTooLarge(format!(
            "{skeletons:.0} skeletons need {evals:.3e} evaluations, budget {}",
            limits.budget
        )));
    }
    let start: Vec<Vec<Point2>> = vec![Vec::new(); morrt.root().multi.num_agents()];
    let mut best: Option<(f64, EnumeratedPlan)> = None;
    for sk in en.skeletons(0) {
        let (c, plan) = en.score(&sk, &mut Vec::new(), &start)?;
        if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
            best = Some((c, plan));
        }
    }
    Ok(best.expect("the stop-at-root skeleton always exists"))
}

/// Expected cost of `plan` as a direct expectation over hidden states and
/// full observation vectors.
pub fn direct_expected_cost(
    plan: &PlanTree,
    env: &EnvModel,
    b0: &BeliefVector,
    costs: &CostParams,
) -> Result<f64> {
    let m = plan.num_agents();
    let mut total = 0.0;
    for leaf in plan.leaves() {
        let mut chain = vec![leaf.id];
        let mut cur = leaf;
        while let Some(p) = cur.parent {
            chain.push(p);
            cur = &plan.branches[p];
        }
        chain.reverse();
        let mut history = Vec::new();
        let mut driven: Vec<Vec<Point2>> = vec![Vec::new(); m];
        for (k, &id) in chain.iter().enumerate() {
            let b = &plan.branches[id];
            for (d, w) in driven.iter_mut().zip(&b.waypoints) {
                *d = concat(d, w);
            }
            if let Some(&next) = chain.get(k + 1) {
                let x = b.observing_position().ok_or_else(|| {
                    Error::PlanIntegrity(format!("branch {id} has children but no observer"))
                })?;
                let o = plan.branches[next].observation.ok_or_else(|| {
                    Error::PlanIntegrity(format!("branch {next} has no observation"))
                })?;
                history.push((o, x));
            }
        }
        for e in 0..env.num_states() {
            let p = b0.probs()[e] * history_likelihood(env, e, &history)?;
            if p == 0.0 {
                continue;
            }
            let cost: f64 = driven
                .iter()
                .map(|d| path_cost(d, e, costs) + terminal_cost(*d.last().unwrap(), e, costs))
                .sum();
            total += p * cost;
        }
    }
    Ok(total)
}

impl EnumeratedPlan {
    /// Builds the plan tree this enumeration describes, with branch weights
    /// filled from `b0`.
    pub fn materialize(
        &self,
        morrt: &MorrtTree,
        env: &EnvModel,
        b0: &BeliefVector,
    ) -> Result<PlanTree> {
        let mut branches = Vec::new();
        let mut frontier = vec![(self, None::<usize>, None::<usize>, b0.to_unnormalized())];
        // breadth-first, so ids grow level by level
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for (node, parent, observation, v) in frontier {
                let id = branches.len();
                if let (Some(p), Some(o)) = (parent, observation) {
                    let pb: &mut PlanBranch = &mut branches[p];
                    if pb.children.len() <= o {
                        pb.children.resize(o + 1, usize::MAX);
                    }
                    pb.children[o] = id;
                }
                match node {
                    EnumeratedPlan::Stop { level, nodes } => {
                        let trees = &morrt.level(*level).multi.trees;
                        let mut paths: Vec<Vec<Point2>> = nodes
                            .iter()
                            .zip(trees)
                            .map(|(&n, t)| t.path_to_node(n))
                            .collect();
                        let len = paths.iter().map(Vec::len).max().unwrap();
                        for p in &mut paths {
                            let last = *p.last().unwrap();
                            p.resize(len, last);
                        }
                        branches.push(PlanBranch {
                            id,
                            parent,
                            observation,
                            waypoints: paths,
                            v,
                            ends_with_observation: false,
                            observer: None,
                            children: vec![],
                        });
                    }
                    EnumeratedPlan::Observe {
                        level,
                        joint,
                        continuations,
                    } => {
                        let lvl = morrt.level(*level);
                        let jn = &lvl.multi.joint_obs_nodes[*joint];
                        let trees = &lvl.multi.trees;
                        let x = jn.observing_position(trees);
                        for (o, c) in continuations.iter().enumerate() {
                            let child_v: Vec<f64> = (0..env.num_states())
                                .map(|e| Ok(v.0[e] * env.observation_likelihood(e, o, x)?))
                                .collect::<Result<_>>()?;
                            next.push((c, Some(id), Some(o), UnnormalizedBelief(child_v)));
                        }
                        branches.push(PlanBranch {
                            id,
                            parent,
                            observation,
                            waypoints: (0..trees.len()).map(|a| jn.agent_path(trees, a)).collect(),
                            v,
                            ends_with_observation: true,
                            observer: Some(Observer {
                                agent: jn.observer,
                                area: jn.area,
                            }),
                            children: vec![],
                        });
                    }
                }
            }
            frontier = next;
        }
        Ok(PlanTree { branches })
    }
}
