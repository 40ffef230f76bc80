//! Single-agent RRT growth with observation-node bookkeeping.
//!
//! A node that lands in an unexplored observation area is annotated as an
//! observation node unless an ancestor already is one, so every
//! root-to-node path carries at most one observation.

use std::collections::BTreeSet;

use rand::Rng;

use crate::cost::{stage_cost, terminal_cost, CostParams};
use crate::environment::UnnormalizedBelief;
use crate::error::{Error, Result};
use crate::geometry::{steer, Point2, Region, Workspace};
use crate::rng::{seeded, PlannerRng};

/// Growth loops give up after this many samples per requested item.
pub const ITERATIONS_PER_REQUEST: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub position: Point2,
    pub parent: Option<usize>,
    pub depth: usize,
    pub observed_area: Option<usize>,
    pub path_has_observation: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObservationNodeRecord {
    pub node: usize,
    pub area: usize,
    pub path_length_edges: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtendOutcome {
    Added(usize),
    Trapped,
    /// The sample coincides with its nearest node.
    Skipped,
}

/// What tree growth needs to know about the world around one agent.
#[derive(Clone, Copy, Debug)]
pub struct GrowthContext<'a> {
    pub workspace: &'a Workspace,
    pub areas: &'a [Region],
    pub goals: &'a [Point2],
    /// Probability of sampling a goal node instead of a uniform point.
    pub goal_bias: f64,
}

impl GrowthContext<'_> {
    fn sample(&self, rng: &mut PlannerRng) -> Point2 {
        if self.goal_bias > 0.0 && !self.goals.is_empty() && rng.gen::<f64>() < self.goal_bias {
            return self.goals[rng.gen_range(0..self.goals.len())];
        }
        self.workspace.bounds.sample(rng)
    }
}

#[derive(Clone, Debug)]
pub struct AgentTree {
    nodes: Vec<TreeNode>,
    step: f64,
    seed: u64,
    rng: PlannerRng,
}

impl PartialEq for AgentTree {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.step == other.step && self.seed == other.seed
    }
}

impl AgentTree {
    pub fn new(start: Point2, step: f64, seed: u64) -> Self {
        assert!(step > 0.0, "step must be positive");
        Self {
            nodes: vec![TreeNode {
                position: start,
                parent: None,
                depth: 0,
                observed_area: None,
                path_has_observation: false,
            }],
            step,
            seed,
            rng: seeded(seed),
        }
    }

    pub fn start(&self) -> Point2 {
        self.nodes[0].position
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Nearest node by squared Euclidean distance; ties go to the lower index.
    pub fn nearest(&self, p: Point2) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.position.distance_squared(p);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    pub fn extend(
        &mut self,
        x_rand: Point2,
        workspace: &Workspace,
        areas: &[Region],
        unexplored: &BTreeSet<usize>,
    ) -> ExtendOutcome {
        let near = self.nearest(x_rand);
        let from = self.nodes[near].position;
        if from == x_rand {
            return ExtendOutcome::Skipped;
        }
        let new = steer(from, x_rand, self.step);
        if !workspace.segment_is_free(from, new) {
            return ExtendOutcome::Trapped;
        }
        let parent = &self.nodes[near];
        let observed_area = if parent.path_has_observation {
            None
        } else {
            areas
                .iter()
                .position(|a| a.contains(new))
                .filter(|a| unexplored.contains(a))
        };
        let node = TreeNode {
            position: new,
            parent: Some(near),
            depth: parent.depth + 1,
            observed_area,
            path_has_observation: parent.path_has_observation || observed_area.is_some(),
        };
        self.nodes.push(node);
        ExtendOutcome::Added(self.nodes.len() - 1)
    }

    pub fn observation_records(&self) -> Vec<ObservationNodeRecord> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| {
                n.observed_area.map(|area| ObservationNodeRecord {
                    node: i,
                    area,
                    path_length_edges: n.depth,
                })
            })
            .collect()
    }

    /// Grows until `n_obs` observation nodes exist in `unexplored` areas.
    pub fn grow_until_observations(
        &mut self,
        ctx: &GrowthContext<'_>,
        unexplored: &BTreeSet<usize>,
        n_obs: usize,
        max_iterations: usize,
    ) -> Result<Vec<ObservationNodeRecord>> {
        let mut found = self.observation_records().len();
        let mut iterations = 0;
        while found < n_obs {
            if iterations >= max_iterations {
                return Err(Error::AreasUnreachable {
                    requested: n_obs,
                    found,
                    iterations,
                });
            }
            iterations += 1;
            let x_rand = ctx.sample(&mut self.rng);
            if let ExtendOutcome::Added(i) =
                self.extend(x_rand, ctx.workspace, ctx.areas, unexplored)
            {
                if self.nodes[i].observed_area.is_some() {
                    found += 1;
                }
            }
        }
        Ok(self.observation_records())
    }

    pub fn grow_until_size(
        &mut self,
        ctx: &GrowthContext<'_>,
        k: usize,
        max_iterations: usize,
    ) -> Result<()> {
        let none = BTreeSet::new();
        let mut iterations = 0;
        while self.nodes.len() < k {
            if iterations >= max_iterations {
                return Err(Error::GrowthExhausted {
                    requested: k,
                    found: self.nodes.len(),
                    iterations,
                });
            }
            iterations += 1;
            let x_rand = ctx.sample(&mut self.rng);
            self.extend(x_rand, ctx.workspace, ctx.areas, &none);
        }
        Ok(())
    }

    /// Waypoints from the start to `node`, both inclusive.
    pub fn path_to_node(&self, node: usize) -> Vec<Point2> {
        let mut path = Vec::with_capacity(self.nodes[node].depth + 1);
        let mut cur = Some(node);
        while let Some(i) = cur {
            path.push(self.nodes[i].position);
            cur = self.nodes[i].parent;
        }
        path.reverse();
        path
    }

    /// Ancestor of `node` (or `node` itself) at exactly `depth` edges.
    pub fn ancestor_at_depth(&self, node: usize, depth: usize) -> usize {
        let mut cur = node;
        while self.nodes[cur].depth > depth {
            cur = self.nodes[cur].parent.expect("non-root node has a parent");
        }
        cur
    }
}

/// Expected cost of committing to `path` whatever is observed.
pub fn cost_heuristic(path: &[Point2], v: &UnnormalizedBelief, costs: &CostParams) -> f64 {
    let end = *path.last().expect("path must be nonempty");
    v.0.iter()
        .enumerate()
        .map(|(e, &w)| {
            let stage: f64 = path
                .windows(2)
                .map(|s| stage_cost(s[0], s[1] - s[0], e, costs))
                .sum();
            w * (stage + terminal_cost(end, e, costs))
        })
        .sum()
}
