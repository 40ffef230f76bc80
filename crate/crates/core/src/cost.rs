//! Stage and terminal costs, and the branch-indexed expected cost of a
//! contingent plan.
//!
//! A plan's expected cost is a sum over its branches. Each branch
//! contributes its stage costs weighted by the branch's unnormalized
//! belief, and a leaf branch additionally contributes the weighted
//! terminal cost of its final waypoints. Because a branch weight's mass is
//! the probability of reaching that branch, the sum is an exact
//! expectation over observation outcomes.

use serde::{Deserialize, Serialize};

use crate::environment::{EnvModel, UnnormalizedBelief};
use crate::error::{Error, Result};
use crate::geometry::Point2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Weight on Euclidean step length.
    pub stage_weight: f64,
    /// Weight on squared distance to the hypothesized goal at mission end.
    pub terminal_weight: f64,
    pub goal_nodes: Vec<Point2>,
}

impl CostParams {
    pub fn new(stage_weight: f64, terminal_weight: f64, goal_nodes: Vec<Point2>) -> Self {
        Self {
            stage_weight,
            terminal_weight,
            goal_nodes,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut errors = Vec::new();
        if !(self.stage_weight >= 0.0 && self.stage_weight.is_finite()) {
            errors.push(format!(
                "stage weight must be nonnegative, got {}",
                self.stage_weight
            ));
        }
        if !(self.terminal_weight >= 0.0 && self.terminal_weight.is_finite()) {
            errors.push(format!(
                "terminal weight must be nonnegative, got {}",
                self.terminal_weight
            ));
        }
        if self.stage_weight <= 0.0 && self.terminal_weight <= 0.0 {
            errors.push("at least one cost weight must be positive".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            stage_weight: self.stage_weight * c,
            terminal_weight: self.terminal_weight * c,
            goal_nodes: self.goal_nodes.clone(),
        }
    }
}

/// `h(x, dx, e)`. The default form does not depend on `x` or `e`.
pub fn stage_cost(_x: Point2, dx: Point2, _e: usize, costs: &CostParams) -> f64 {
    costs.stage_weight * dx.norm()
}

/// `h_N(x, e)`.
pub fn terminal_cost(x: Point2, e: usize, costs: &CostParams) -> f64 {
    costs.terminal_weight * x.distance_squared(costs.goal_nodes[e])
}

/// Sum of stage costs along consecutive waypoints, for state `e`.
pub fn path_stage_cost(path: &[Point2], e: usize, costs: &CostParams) -> f64 {
    path.windows(2)
        .map(|w| stage_cost(w[0], w[1] - w[0], e, costs))
        .sum()
}

/// The agent and area that produce the observation ending a branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observer {
    pub agent: usize,
    pub area: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanBranch {
    pub id: usize,
    pub parent: Option<usize>,
    /// Observation that selects this branch; `None` for the root branch.
    pub observation: Option<usize>,
    /// One waypoint list per agent, all with the same length.
    pub waypoints: Vec<Vec<Point2>>,
    pub v: UnnormalizedBelief,
    pub ends_with_observation: bool,
    pub observer: Option<Observer>,
    /// Child branch ids indexed by observation.
    pub children: Vec<usize>,
}

impl PlanBranch {
    pub fn num_steps(&self) -> usize {
        self.waypoints
            .first()
            .map_or(0, |w| w.len().saturating_sub(1))
    }

    pub fn end_positions(&self) -> Vec<Point2> {
        self.waypoints
            .iter()
            .map(|w| *w.last().expect("nonempty branch"))
            .collect()
    }

    pub fn observing_position(&self) -> Option<Point2> {
        self.observer
            .map(|o| *self.waypoints[o.agent].last().expect("nonempty branch"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanTree {
    pub branches: Vec<PlanBranch>,
}

impl PlanTree {
    pub fn root(&self) -> &PlanBranch {
        &self.branches[0]
    }

    pub fn num_agents(&self) -> usize {
        self.root().waypoints.len()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &PlanBranch> {
        self.branches.iter().filter(|b| !b.ends_with_observation)
    }

    /// Number of branches ending with an observation.
    pub fn branch_points(&self) -> usize {
        self.branches
            .iter()
            .filter(|b| b.ends_with_observation)
            .count()
    }

    /// Observation vector selecting branch `id`, root first.
    pub fn observation_vector(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = &self.branches[id];
        while let (Some(o), Some(p)) = (cur.observation, cur.parent) {
            out.push(o);
            cur = &self.branches[p];
        }
        out.reverse();
        out
    }

    /// Number of observations on the way to branch `id`.
    pub fn branch_depth(&self, id: usize) -> usize {
        let mut d = 0;
        let mut cur = &self.branches[id];
        while let Some(p) = cur.parent {
            d += 1;
            cur = &self.branches[p];
        }
        d
    }

    /// Largest number of observations along any mission.
    pub fn observation_depth(&self) -> usize {
        self.leaves()
            .map(|b| self.branch_depth(b.id))
            .max()
            .unwrap_or(0)
    }

    /// Walks from the root following `observations`; returns the visited ids.
    pub fn follow(&self, observations: &[usize]) -> Result<Vec<usize>> {
        let mut ids = vec![0];
        let mut cur = 0;
        for &o in observations {
            let b = &self.branches[cur];
            cur = *b.children.get(o).ok_or_else(|| {
                Error::PlanIntegrity(format!("branch {cur} has no child for observation {o}"))
            })?;
            ids.push(cur);
        }
        Ok(ids)
    }

    /// Checks structure, continuity, observation placement and weight
    /// recursion against `env`.
    pub fn validate(&self, env: &EnvModel) -> Result<()> {
        let fail = |m: String| Err(Error::PlanIntegrity(m));
        if self.branches.is_empty() {
            return fail("plan has no branches".into());
        }
        let m = self.num_agents();
        let g = env.num_observations();
        for (i, b) in self.branches.iter().enumerate() {
            if b.id != i {
                return fail(format!("branch at position {i} has id {}", b.id));
            }
            if b.waypoints.len() != m || b.waypoints.iter().any(|w| w.is_empty()) {
                return fail(format!(
                    "branch {i} must carry a nonempty waypoint list per agent"
                ));
            }
            let n = b.waypoints[0].len();
            if b.waypoints.iter().any(|w| w.len() != n) {
                return fail(format!("branch {i} has unequal per-agent waypoint counts"));
            }
            if b.v.0.len() != env.num_states() {
                return fail(format!("branch {i} weight has wrong dimension"));
            }
            match (i, b.parent, b.observation) {
                (0, None, None) => {}
                (0, _, _) => return fail("root branch must have no parent or observation".into()),
                (_, Some(p), Some(o)) => {
                    let parent = &self.branches[p];
                    if parent.children.get(o) != Some(&i) {
                        return fail(format!("branch {i} is not child {o} of branch {p}"));
                    }
                    for a in 0..m {
                        if b.waypoints[a][0] != *parent.waypoints[a].last().unwrap() {
                            return fail(format!(
                                "branch {i} agent {a} does not start where its parent ends"
                            ));
                        }
                    }
                    let x = parent.observing_position().unwrap();
                    let expected = env.theta_matrix(o, x)?.apply(&parent.v);
                    if !expected.approx_eq(&b.v, 1e-12) {
                        return fail(format!("branch {i} weight does not follow its parent's"));
                    }
                }
                _ => {
                    return fail(format!(
                        "branch {i} must have both a parent and an observation"
                    ))
                }
            }
            if b.ends_with_observation {
                if b.children.len() != g {
                    return fail(format!("branch {i} must have one child per observation"));
                }
                let Some(obs) = b.observer else {
                    return fail(format!(
                        "branch {i} ends with an observation but has no observer"
                    ));
                };
                if obs.agent >= m {
                    return fail(format!("branch {i} observer out of range"));
                }
                let x = b.observing_position().unwrap();
                if env.area_at(x) != Some(obs.area) {
                    return fail(format!("branch {i} observes outside area {}", obs.area));
                }
            } else if !b.children.is_empty() || b.observer.is_some() {
                return fail(format!("leaf branch {i} must not have children"));
            }
        }
        Ok(())
    }
}

/// Branch-sum expected cost, summed over agents.
pub fn plan_expected_cost(plan: &PlanTree, costs: &CostParams) -> f64 {
    let mut total = 0.0;
    for b in &plan.branches {
        for path in &b.waypoints {
            for (e, &w) in b.v.0.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let mut c = path_stage_cost(path, e, costs);
                if !b.ends_with_observation {
                    c += terminal_cost(*path.last().unwrap(), e, costs);
                }
                total += w * c;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Region;

    fn costs(alpha: f64, wn: f64) -> CostParams {
        CostParams::new(
            alpha,
            wn,
            vec![Point2::new(3.0, 0.0), Point2::new(-3.0, 0.0)],
        )
    }

    #[test]
    fn stage_examples() {
        let c = costs(1.0, 1.0);
        let o = Point2::new(0.0, 0.0);
        assert_eq!(stage_cost(o, Point2::new(0.0, 0.0), 0, &c), 0.0);
        assert_eq!(stage_cost(o, Point2::new(3.0, 4.0), 0, &c), 5.0);
        assert_eq!(
            stage_cost(o, Point2::new(1.0, 0.0), 1, &costs(2.0, 1.0)),
            2.0
        );
    }

    #[test]
    fn terminal_examples() {
        let c = costs(1.0, 1.0);
        assert_eq!(terminal_cost(Point2::new(3.0, 0.0), 0, &c), 0.0);
        assert_eq!(terminal_cost(Point2::new(3.0, 2.0), 0, &c), 4.0);
        assert_eq!(
            terminal_cost(Point2::new(9.0, 9.0), 1, &costs(1.0, 0.0)),
            0.0
        );
    }

    fn straight_path() -> Vec<Point2> {
        (0..=3).map(|i| Point2::new(i as f64, 0.0)).collect()
    }

    fn single(v: Vec<f64>, path: Vec<Point2>) -> PlanTree {
        PlanTree {
            branches: vec![PlanBranch {
                id: 0,
                parent: None,
                observation: None,
                waypoints: vec![path],
                v: UnnormalizedBelief(v),
                ends_with_observation: false,
                observer: None,
                children: vec![],
            }],
        }
    }

    #[test]
    fn single_branch_cost() {
        let plan = single(vec![1.0, 0.0], straight_path());
        assert!((plan_expected_cost(&plan, &costs(1.0, 1.0)) - 3.0).abs() < 1e-12);
        let still = single(vec![0.5, 0.5], vec![Point2::new(1.0, 1.0); 4]);
        assert_eq!(plan_expected_cost(&still, &costs(1.0, 0.0)), 0.0);
    }

    /// Noiseless two-state plan: observe at (0,0), then walk to the goal
    /// the observation reveals.
    #[test]
    fn noiseless_plan_matches_leaf_enumeration() {
        let area = Region::rect(Point2::new(-0.5, -0.5), Point2::new(0.5, 0.5));
        let env = EnvModel::new(
            vec![Point2::new(3.0, 0.0), Point2::new(-3.0, 0.0)],
            vec![area],
            1.0,
        )
        .unwrap();
        let c = costs(1.0, 1.0);
        let b0 = UnnormalizedBelief(vec![0.3, 0.7]);
        let obs = Observer { agent: 0, area: 0 };
        let start = vec![Point2::new(0.0, -2.0), Point2::new(0.0, 0.0)];
        let to_right = vec![Point2::new(0.0, 0.0), Point2::new(3.0, 0.0)];
        let to_left = vec![Point2::new(0.0, 0.0), Point2::new(-2.0, 0.0)];
        let plan = PlanTree {
            branches: vec![
                PlanBranch {
                    id: 0,
                    parent: None,
                    observation: None,
                    waypoints: vec![start],
                    v: b0.clone(),
                    ends_with_observation: true,
                    observer: Some(obs),
                    children: vec![1, 2],
                },
                PlanBranch {
                    id: 1,
                    parent: Some(0),
                    observation: Some(0),
                    waypoints: vec![to_right],
                    v: UnnormalizedBelief(vec![0.3, 0.0]),
                    ends_with_observation: false,
                    observer: None,
                    children: vec![],
                },
                PlanBranch {
                    id: 2,
                    parent: Some(0),
                    observation: Some(1),
                    waypoints: vec![to_left],
                    v: UnnormalizedBelief(vec![0.0, 0.7]),
                    ends_with_observation: false,
                    observer: None,
                    children: vec![],
                },
            ],
        };
        plan.validate(&env).unwrap();
        // leaf o=0 (prob 0.3): 2 + 3 + 0; leaf o=1 (prob 0.7): 2 + 2 + 1
        let expected = 0.3 * 5.0 + 0.7 * 5.0;
        assert!((plan_expected_cost(&plan, &c) - expected).abs() < 1e-12);
        assert_eq!(plan.observation_vector(2), vec![1]);
        assert_eq!(plan.follow(&[1]).unwrap(), vec![0, 2]);
        assert_eq!(plan.branch_points(), 1);
    }

    #[test]
    fn scaling_weights_scales_cost() {
        let mut plan = single(vec![0.5, 0.5], straight_path());
        let c = costs(1.0, 0.7);
        let base = plan_expected_cost(&plan, &c);
        plan.branches[0].v = plan.branches[0].v.scaled(3.0);
        assert!((plan_expected_cost(&plan, &c) - 3.0 * base).abs() < 1e-12);
    }

    #[test]
    fn validate_flags_discontinuity() {
        let env = EnvModel::new(vec![Point2::new(0.0, 0.0)], vec![], 1.0).unwrap();
        let mut plan = single(vec![1.0], straight_path());
        plan.validate(&env).unwrap();
        plan.branches[0].waypoints.push(vec![]);
        assert!(plan.validate(&env).is_err());
    }
}
