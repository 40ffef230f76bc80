//! Breadth-first expansion of the tree of RRTs.
//!
//! Every joint observation node of a level seeds a child level whose trees
//! start at the node's (shortened) team positions and may only record
//! observations in areas not yet explored on the way from the root.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_rrt::{build_multi_rrt, JointObservationNode, MultiRrt};
use crate::rng::derive_seed;
use crate::scenario::Scenario;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorrtParams {
    /// Observation nodes per agent tree at levels with unexplored areas.
    pub n_obs: usize,
    /// Node count for trees grown after every area is explored.
    pub k: usize,
    /// Steering step shared by all agents.
    pub step: f64,
    pub seed: u64,
    /// Per-growth sample budget; defaults to 1000 per requested node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub goal_bias: f64,
}

impl MorrtParams {
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut errors = Vec::new();
        if self.n_obs < 1 {
            errors.push("n_obs must be at least 1".into());
        }
        if self.k < 1 {
            errors.push("k must be at least 1".into());
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            errors.push(format!("step must be positive, got {}", self.step));
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            errors.push(format!(
                "goal_bias must lie in [0, 1], got {}",
                self.goal_bias
            ));
        }
        if self.max_iterations == Some(0) {
            errors.push("max_iterations must be positive".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    pub multi: MultiRrt,
    /// Parent level and the index of the joint node this level starts from.
    pub parent: Option<(usize, usize)>,
    pub depth: usize,
    /// Child level per joint observation node, aligned with
    /// `multi.joint_obs_nodes`.
    pub children: Vec<usize>,
    /// Joint-node indices from the root to this level.
    pub branch_path: Vec<usize>,
}

impl Level {
    pub fn source_area(&self, tree: &MorrtTree) -> Option<usize> {
        self.parent
            .map(|(p, j)| tree.levels[p].multi.joint_obs_nodes[j].area)
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MorrtTree {
    pub levels: Vec<Level>,
    /// Joint nodes dropped because their child level could not be grown.
    pub warnings: Vec<String>,
}

impl MorrtTree {
    pub fn root(&self) -> &Level {
        &self.levels[0]
    }

    pub fn level(&self, i: usize) -> &Level {
        &self.levels[i]
    }

    pub fn depth(&self) -> usize {
        self.levels.iter().map(|l| l.depth).max().unwrap_or(0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Level> {
        self.levels.iter().filter(|l| l.is_leaf())
    }

    pub fn joint_node(&self, level: usize, j: usize) -> &JointObservationNode {
        &self.levels[level].multi.joint_obs_nodes[j]
    }

    pub fn total_nodes(&self) -> usize {
        self.levels
            .iter()
            .flat_map(|l| l.multi.trees.iter())
            .map(|t| t.len())
            .sum()
    }
}

fn agent_seeds(base: u64, branch_path: &[usize], m: usize) -> Vec<u64> {
    (0..m)
        .map(|a| {
            let mut path: Vec<u64> = branch_path.iter().map(|&j| j as u64).collect();
            path.push(a as u64);
            derive_seed(
                base,
                &[&[branch_path.len() as u64], path.as_slice()].concat(),
            )
        })
        .collect()
}

fn with_context(err: Error, depth: usize, branch: &[usize]) -> Error {
    match err {
        Error::Growth { agent, source, .. } => Error::Growth {
            depth,
            branch: branch.to_vec(),
            agent,
            source,
        },
        other => other,
    }
}

pub fn build_morrt(scenario: &Scenario, params: &MorrtParams) -> Result<MorrtTree> {
    scenario.validate()?;
    params.validate().map_err(Error::Validation)?;
    let m = scenario.num_agents();
    let all_areas: BTreeSet<usize> = (0..scenario.env.num_areas()).collect();
    let b0 = scenario.initial_belief.to_unnormalized();

    let root = build_multi_rrt(
        &scenario.starts(),
        scenario,
        &all_areas,
        params,
        &agent_seeds(params.seed, &[], m),
        b0.clone(),
    )
    .map_err(|e| with_context(e, 0, &[]))?;
    let mut tree = MorrtTree {
        levels: vec![Level {
            multi: root,
            parent: None,
            depth: 0,
            children: Vec::new(),
            branch_path: Vec::new(),
        }],
        warnings: Vec::new(),
    };

    let mut queue = VecDeque::from([0usize]);
    while let Some(pi) = queue.pop_front() {
        let parent = &tree.levels[pi];
        let depth = parent.depth + 1;
        let parent_path = parent.branch_path.clone();
        let explored_before = parent.multi.explored_areas_before.clone();
        let joints = parent.multi.joint_obs_nodes.clone();
        let entry = parent.multi.entry_belief.clone();

        let mut kept = Vec::with_capacity(joints.len());
        let mut children = Vec::with_capacity(joints.len());
        for (j, joint) in joints.into_iter().enumerate() {
            let mut explored = explored_before.clone();
            explored.insert(joint.area);
            let unexplored: BTreeSet<usize> = all_areas.difference(&explored).copied().collect();
            let mut branch_path = parent_path.clone();
            branch_path.push(j);
            let starts = joint.positions(&tree.levels[pi].multi.trees);
            let seeds = agent_seeds(params.seed, &branch_path, m);
            // the child is shared by every observation at its source node, so it
            // ranks candidates with the marginal belief, which equals the entry belief
            match build_multi_rrt(
                &starts,
                scenario,
                &unexplored,
                params,
                &seeds,
                entry.clone(),
            ) {
                Ok(multi) => {
                    let idx = tree.levels.len();
                    tree.levels.push(Level {
                        multi,
                        parent: Some((pi, kept.len())),
                        depth,
                        children: Vec::new(),
                        branch_path,
                    });
                    kept.push(joint);
                    children.push(idx);
                    queue.push_back(idx);
                }
                Err(e) => {
                    let e = with_context(e, depth, &branch_path);
                    tree.warnings
                        .push(format!("dropped joint observation node: {e}"));
                }
            }
        }
        let parent = &mut tree.levels[pi];
        parent.multi.joint_obs_nodes = kept;
        parent.children = children;
    }
    Ok(tree)
}
