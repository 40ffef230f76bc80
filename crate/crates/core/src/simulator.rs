//! Monte Carlo execution of contingent plans.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{path_stage_cost, terminal_cost, CostParams, PlanTree};
use crate::environment::{BeliefVector, EnvModel};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::rng::{derive_seed, seeded, PlannerRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionTrace {
    pub true_e: usize,
    pub observations: Vec<usize>,
    pub branch_ids: Vec<usize>,
    /// Driven path per agent.
    pub visited: Vec<Vec<Point2>>,
    pub realized_cost: f64,
}

/// Executes `plan` once in a world whose hidden state is `true_e`.
pub fn run_mission<R: Rng + ?Sized>(
    plan: &PlanTree,
    env: &EnvModel,
    costs: &CostParams,
    true_e: usize,
    rng: &mut R,
) -> Result<MissionTrace> {
    if true_e >= env.num_states() {
        return Err(Error::InvalidIndex(format!(
            "true state {true_e} out of range for {} states",
            env.num_states()
        )));
    }
    let m = plan.num_agents();
    let mut visited: Vec<Vec<Point2>> = vec![Vec::new(); m];
    let mut observations = Vec::new();
    let mut branch_ids = Vec::new();
    let mut cur = 0;
    loop {
        let b = &plan.branches[cur];
        branch_ids.push(cur);
        for (a, w) in b.waypoints.iter().enumerate() {
            let skip = usize::from(!visited[a].is_empty());
            visited[a].extend_from_slice(&w[skip..]);
        }
        if b.children.is_empty() {
            break;
        }
        let x = b.observing_position().ok_or_else(|| {
            Error::PlanIntegrity(format!("branch {cur} has children but no observer"))
        })?;
        let o = env.sample_observation(true_e, x, rng)?;
        observations.push(o);
        cur = *b.children.get(o).ok_or_else(|| {
            Error::PlanIntegrity(format!("branch {cur} has no child for observation {o}"))
        })?;
    }
    let realized_cost = visited
        .iter()
        .map(|p| {
            path_stage_cost(p, true_e, costs) + terminal_cost(*p.last().unwrap(), true_e, costs)
        })
        .sum();
    Ok(MissionTrace {
        true_e,
        observations,
        branch_ids,
        visited,
        realized_cost,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub n_runs: usize,
    pub mean_cost: f64,
    pub std_error: f64,
    /// Missions drawn per hidden state.
    pub per_e_counts: Vec<usize>,
}

/// Runs `n_runs` missions with the hidden state drawn from `b0`.
///
/// Run `i` uses its own stream derived from `(seed, i)`, so results do not
/// depend on evaluation order.
pub fn monte_carlo(
    plan: &PlanTree,
    env: &EnvModel,
    costs: &CostParams,
    b0: &BeliefVector,
    n_runs: usize,
    seed: u64,
) -> Result<McSummary> {
    run_batch(plan, env, costs, n_runs, seed, |rng| b0.sample(rng))
}

/// Like [`monte_carlo`] with the hidden state fixed to `true_e`.
pub fn monte_carlo_given_state(
    plan: &PlanTree,
    env: &EnvModel,
    costs: &CostParams,
    true_e: usize,
    n_runs: usize,
    seed: u64,
) -> Result<McSummary> {
    if true_e >= env.num_states() {
        return Err(Error::InvalidIndex(format!(
            "true state {true_e} out of range for {} states",
            env.num_states()
        )));
    }
    run_batch(plan, env, costs, n_runs, seed, |_| true_e)
}

fn run_batch(
    plan: &PlanTree,
    env: &EnvModel,
    costs: &CostParams,
    n_runs: usize,
    seed: u64,
    draw_state: impl Fn(&mut PlannerRng) -> usize,
) -> Result<McSummary> {
    if n_runs == 0 {
        return Err(Error::Validation(vec!["n_runs must be positive".into()]));
    }
    let mut per_e_counts = vec![0; env.num_states()];
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n_runs {
        let mut rng = seeded(derive_seed(seed, &[i as u64]));
        let e = draw_state(&mut rng);
        per_e_counts[e] += 1;
        let c = run_mission(plan, env, costs, e, &mut rng)?.realized_cost;
        let delta = c - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (c - mean);
    }
    let var = if n_runs > 1 {
        m2 / (n_runs - 1) as f64
    } else {
        0.0
    };
    Ok(McSummary {
        n_runs,
        mean_cost: mean,
        std_error: (var / n_runs as f64).sqrt(),
        per_e_counts,
    })
}
