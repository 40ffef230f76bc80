//! In-memory world description shared by the planner, the DP and the
//! simulator.

use crate::cost::CostParams;
use crate::environment::{BeliefVector, EnvModel};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Workspace};
use crate::morrt::MorrtParams;

#[derive(Clone, Debug, PartialEq)]
pub struct Agent {
    pub name: String,
    pub start: Point2,
    pub workspace: Workspace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub agents: Vec<Agent>,
    pub env: EnvModel,
    pub initial_belief: BeliefVector,
    pub params: MorrtParams,
    pub costs: CostParams,
}

impl Scenario {
    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn starts(&self) -> Vec<Point2> {
        self.agents.iter().map(|a| a.start).collect()
    }

    /// Collects every violation rather than stopping at the first.
    pub fn violations(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.agents.is_empty() {
            errors.push("at least one agent is required".into());
        }
        for (i, a) in self.agents.iter().enumerate() {
            if let Err(es) = a.workspace.validate() {
                errors.extend(
                    es.into_iter()
                        .map(|e| format!("agent {i} ({}): {e}", a.name)),
                );
            }
            if !a.start.is_finite() || !a.workspace.is_free(a.start) {
                errors.push(format!(
                    "agent {i} ({}): start ({}, {}) is inside an obstacle or outside the bounds",
                    a.name, a.start.x, a.start.y
                ));
            }
        }
        if let Err(es) = self.env.validate() {
            errors.extend(es);
        }
        if self.initial_belief.len() != self.env.num_states() {
            errors.push(format!(
                "initial belief has {} entries but there are {} goal nodes",
                self.initial_belief.len(),
                self.env.num_states()
            ));
        }
        if let Err(es) = self.params.validate() {
            errors.extend(es);
        }
        if let Err(es) = self.costs.validate() {
            errors.extend(es);
        }
        if self.costs.goal_nodes != self.env.goal_nodes {
            errors.push("cost goal nodes must match the environment goal nodes".into());
        }
        errors
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}
