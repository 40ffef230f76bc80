//! Scenario files (TOML) and plan and trace files (JSON).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::{CostParams, PlanTree};
use crate::environment::{BeliefVector, EnvModel};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect, Region, Workspace};
use crate::morrt::MorrtParams;
use crate::scenario::{Agent, Scenario};
use crate::simulator::MissionTrace;

pub const PLAN_FILE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    #[serde(default)]
    pub name: String,
    /// Meters.
    pub start: Point2,
    pub bounds: Rect,
    #[serde(default)]
    pub obstacles: Vec<Region>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvEntry {
    pub goal_nodes: Vec<Point2>,
    #[serde(default)]
    pub observation_areas: Vec<Region>,
    pub accuracy: f64,
    pub initial_belief: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostEntry {
    /// Cost per meter travelled.
    pub stage_weight: f64,
    /// Cost per squared meter of final distance to the target.
    pub terminal_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    pub agents: Vec<AgentEntry>,
    pub env: EnvEntry,
    pub params: MorrtParams,
    pub costs: CostEntry,
}

impl ScenarioFile {
    /// Checks every invariant and returns all violations at once.
    pub fn into_scenario(self) -> Result<Scenario> {
        let mut errors = Vec::new();
        let g = self.env.goal_nodes.len();
        let initial_belief = match BeliefVector::new(self.env.initial_belief.clone()) {
            Ok(b) => b,
            Err(Error::Validation(es)) => {
                errors.extend(es);
                BeliefVector::uniform(g.max(1))
            }
            Err(e) => return Err(e),
        };
        let env = EnvModel {
            goal_nodes: self.env.goal_nodes.clone(),
            observation_areas: self.env.observation_areas,
            accuracy: self.env.accuracy,
        };
        let scenario = Scenario {
            name: self.name,
            agents: self
                .agents
                .into_iter()
                .enumerate()
                .map(|(i, a)| Agent {
                    name: if a.name.is_empty() {
                        format!("agent{i}")
                    } else {
                        a.name
                    },
                    start: a.start,
                    workspace: Workspace::new(a.bounds, a.obstacles),
                })
                .collect(),
            env,
            initial_belief,
            params: self.params,
            costs: CostParams::new(
                self.costs.stage_weight,
                self.costs.terminal_weight,
                self.env.goal_nodes,
            ),
        };
        errors.extend(scenario.violations());
        if errors.is_empty() {
            Ok(scenario)
        } else {
            Err(Error::Validation(errors))
        }
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            name: s.name.clone(),
            agents: s
                .agents
                .iter()
                .map(|a| AgentEntry {
                    name: a.name.clone(),
                    start: a.start,
                    bounds: a.workspace.bounds,
                    obstacles: a.workspace.obstacles.clone(),
                })
                .collect(),
            env: EnvEntry {
                goal_nodes: s.env.goal_nodes.clone(),
                observation_areas: s.env.observation_areas.clone(),
                accuracy: s.env.accuracy,
                initial_belief: s.initial_belief.probs().to_vec(),
            },
            params: s.params.clone(),
            costs: CostEntry {
                stage_weight: s.costs.stage_weight,
                terminal_weight: s.costs.terminal_weight,
            },
        }
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_scenario()
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    parse_scenario(&fs::read_to_string(path)?)
}

pub fn scenario_to_toml(s: &Scenario) -> Result<String> {
    toml::to_string(&ScenarioFile::from_scenario(s)).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    pub morrt_levels: usize,
    pub morrt_nodes: usize,
    pub dp_subproblems: usize,
    pub branches: usize,
    pub branch_points: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub version: u32,
    pub scenario: String,
    pub seed: u64,
    pub expected_cost: f64,
    pub stats: PlanStats,
    pub plan: PlanTree,
}

pub fn plan_to_json(plan: &PlanFile) -> Result<String> {
    let mut s = serde_json::to_string_pretty(plan).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn save_plan(path: impl AsRef<Path>, plan: &PlanFile) -> Result<()> {
    fs::write(path, plan_to_json(plan)?)?;
    Ok(())
}

pub fn load_plan(path: impl AsRef<Path>) -> Result<PlanFile> {
    let text = fs::read_to_string(path)?;
    let plan: PlanFile = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if plan.version != PLAN_FILE_VERSION {
        return Err(Error::Parse(format!(
            "unsupported plan file version {}",
            plan.version
        )));
    }
    Ok(plan)
}

pub fn save_traces(path: impl AsRef<Path>, traces: &[MissionTrace]) -> Result<()> {
    let mut s = serde_json::to_string_pretty(traces).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn load_traces(path: impl AsRef<Path>) -> Result<Vec<MissionTrace>> {
    serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
name = "t"

[[agents]]
name = "rover"
start = [2.5, 0.5]
bounds = { min = [0.0, 0.0], max = [5.0, 5.0] }
obstacles = [{ rect = { min = [1.5, 2.0], max = [3.5, 3.0] } }]

[env]
goal_nodes = [[0.5, 4.5], [4.5, 4.5]]
observation_areas = [{ rect = { min = [2.0, 1.0], max = [3.0, 1.5] } }, { disk = { center = [2.5, 3.8], radius = 0.3 } }]
accuracy = 0.8
initial_belief = [0.5, 0.5]

[params]
n_obs = 2
k = 20
step = 0.5
seed = 7

[costs]
stage_weight = 1.0
terminal_weight = 10.0
"#;

    fn err_text(text: &str) -> String {
        parse_scenario(text).unwrap_err().to_string()
    }

    #[test]
    fn parses_base() {
        let s = parse_scenario(BASE).unwrap();
        assert_eq!(s.env.num_states(), 2);
        assert_eq!(s.env.accuracy, 0.8);
        assert_eq!(s.initial_belief.probs(), &[0.5, 0.5]);
        assert_eq!(s.params.goal_bias, 0.0);
        assert_eq!(s.costs.goal_nodes, s.env.goal_nodes);
    }

    #[test]
    fn belief_must_sum_to_one() {
        let t = BASE.replace("initial_belief = [0.5, 0.5]", "initial_belief = [0.6, 0.6]");
        assert!(err_text(&t).contains("belief must sum to 1"));
    }

    #[test]
    fn overlapping_areas_rejected() {
        let t = BASE.replace("center = [2.5, 3.8]", "center = [2.5, 1.2]");
        assert!(err_text(&t).contains("observation areas must be disjoint"));
    }

    #[test]
    fn all_violations_reported() {
        let t = BASE
            .replace("initial_belief = [0.5, 0.5]", "initial_belief = [0.6, 0.6]")
            .replace("start = [2.5, 0.5]", "start = [2.5, 2.5]")
            .replace("center = [2.5, 3.8]", "center = [2.5, 1.2]");
        let e = err_text(&t);
        assert!(e.contains("belief must sum to 1"), "{e}");
        assert!(e.contains("inside an obstacle"), "{e}");
        assert!(e.contains("disjoint"), "{e}");
    }

    #[test]
    fn schema_errors_are_parse_errors() {
        let t = BASE.replace("accuracy = 0.8", "accuracy = \"high\"");
        assert!(matches!(parse_scenario(&t), Err(Error::Parse(_))));
        let t = BASE.replace("seed = 7", "seed = 7\nbogus = 1");
        assert!(matches!(parse_scenario(&t), Err(Error::Parse(_))));
    }

    #[test]
    fn scenario_round_trips() {
        let s = parse_scenario(BASE).unwrap();
        let again = parse_scenario(&scenario_to_toml(&s).unwrap()).unwrap();
        assert_eq!(s, again);
    }
}
