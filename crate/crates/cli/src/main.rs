use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use morrt_core::io::{
    load_plan, load_scenario, save_plan, save_traces, PlanFile, PlanStats, PLAN_FILE_VERSION,
};
use morrt_core::oracle::{enumerate_best, OracleLimits};
use morrt_core::rng::{derive_seed, seeded};
use morrt_core::simulator::{monte_carlo, monte_carlo_given_state, run_mission};
use morrt_core::svg::render_svg;
use morrt_core::{best_plan, build_morrt, Error, Scenario};

#[derive(Parser)]
#[command(
    name = "morrt",
    version,
    about = "Observation-contingent mission planning for multi-agent target search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the tree of RRTs and select the minimum expected cost plan.
    Plan {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long, env = "MORRT_SEED")]
        seed: Option<u64>,
    },
    /// Execute a saved plan in sampled worlds.
    Simulate {
        plan: PathBuf,
        scenario: PathBuf,
        #[arg(long)]
        runs: usize,
        /// Fix the hidden state instead of drawing it from the initial belief.
        #[arg(long)]
        true_e: Option<usize>,
        #[arg(long, env = "MORRT_SEED", default_value_t = 0)]
        seed: u64,
        /// Write the first N mission traces here as JSON.
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        trace_count: usize,
    },
    /// Exhaustively search every plan the tree of RRTs expresses.
    Oracle {
        scenario: PathBuf,
        #[arg(long, env = "MORRT_SEED")]
        seed: Option<u64>,
        #[arg(long, default_value_t = OracleLimits::default().max_nodes)]
        max_nodes: usize,
        #[arg(long, default_value_t = OracleLimits::default().max_depth)]
        max_depth: usize,
        #[arg(long, default_value_t = OracleLimits::default().budget)]
        budget: u64,
    },
    /// Check a scenario file without planning.
    Validate { scenario: PathBuf },
}

enum Failure {
    Usage(String),
    Validation(String),
    Planning(String),
}

impl Failure {
    fn from_load(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Usage(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<Scenario, Failure> {
    let mut s = load_scenario(path).map_err(|e| match e {
        Error::Io(io) => Failure::Usage(format!("{}: {io}", path.display())),
        other => Failure::from_load(other),
    })?;
    if let Some(seed) = seed {
        s.params.seed = seed;
    }
    Ok(s)
}

fn planning(e: Error) -> Failure {
    match e {
        Error::Io(_) => Failure::Usage(e.to_string()),
        Error::Validation(_) | Error::Parse(_) => Failure::Validation(e.to_string()),
        other => Failure::Planning(other.to_string()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Plan {
            scenario,
            out,
            svg,
            seed,
        } => {
            let s = load(&scenario, seed)?;
            let t0 = Instant::now();
            let morrt = build_morrt(&s, &s.params).map_err(planning)?;
            let t1 = Instant::now();
            let sol = best_plan(&morrt, &s.env, &s.initial_belief, &s.costs).map_err(planning)?;
            let t2 = Instant::now();
            sol.plan.validate(&s.env).map_err(planning)?;
            for w in &morrt.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "built {} levels ({} nodes) in {:.3}s, solved {} subproblems in {:.3}s",
                morrt.levels.len(),
                morrt.total_nodes(),
                (t1 - t0).as_secs_f64(),
                sol.subproblems,
                (t2 - t1).as_secs_f64()
            );
            println!("expected_cost = {}", sol.expected_cost);
            println!("branches = {}", sol.plan.branches.len());
            println!("branch_points = {}", sol.plan.branch_points());
            println!("observation_depth = {}", sol.plan.observation_depth());
            if let Some(path) = svg {
                render_svg(&sol.plan, &s, &path).map_err(planning)?;
            }
            if let Some(path) = out {
                let file = PlanFile {
                    version: PLAN_FILE_VERSION,
                    scenario: s.name.clone(),
                    seed: s.params.seed,
                    expected_cost: sol.expected_cost,
                    stats: PlanStats {
                        morrt_levels: morrt.levels.len(),
                        morrt_nodes: morrt.total_nodes(),
                        dp_subproblems: sol.subproblems,
                        branches: sol.plan.branches.len(),
                        branch_points: sol.plan.branch_points(),
                        warnings: morrt.warnings.clone(),
                    },
                    plan: sol.plan,
                };
                save_plan(&path, &file).map_err(planning)?;
            }
            Ok(())
        }
        Command::Simulate {
            plan,
            scenario,
            runs,
            true_e,
            seed,
            traces,
            trace_count,
        } => {
            if runs == 0 {
                return Err(Failure::Usage("--runs must be positive".into()));
            }
            let s = load(&scenario, None)?;
            let file = load_plan(&plan).map_err(|e| match e {
                Error::Io(io) => Failure::Usage(format!("{}: {io}", plan.display())),
                other => Failure::Validation(other.to_string()),
            })?;
            file.plan
                .validate(&s.env)
                .map_err(|e| Failure::Validation(format!("plan does not fit scenario: {e}")))?;
            if let Some(e) = true_e {
                if e >= s.env.num_states() {
                    return Err(Failure::Usage(format!(
                        "--true-e {e} out of range for {} goal nodes",
                        s.env.num_states()
                    )));
                }
            }
            let summary = match true_e {
                Some(e) => monte_carlo_given_state(&file.plan, &s.env, &s.costs, e, runs, seed),
                None => monte_carlo(&file.plan, &s.env, &s.costs, &s.initial_belief, runs, seed),
            }
            .map_err(planning)?;
            println!("n_runs = {}", summary.n_runs);
            println!("mean_cost = {}", summary.mean_cost);
            println!("std_error = {}", summary.std_error);
            println!("per_e_counts = {:?}", summary.per_e_counts);
            if true_e.is_none() {
                let z = if summary.std_error > 0.0 {
                    (summary.mean_cost - file.expected_cost) / summary.std_error
                } else {
                    0.0
                };
                println!("planned_cost = {}", file.expected_cost);
                println!("z_score = {z:.3}");
            }
            if let Some(path) = traces {
                let list = (0..trace_count.min(runs))
                    .map(|i| {
                        let mut rng = seeded(derive_seed(seed, &[i as u64]));
                        let e = true_e.unwrap_or_else(|| s.initial_belief.sample(&mut rng));
                        run_mission(&file.plan, &s.env, &s.costs, e, &mut rng)
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(planning)?;
                save_traces(&path, &list).map_err(planning)?;
            }
            Ok(())
        }
        Command::Oracle {
            scenario,
            seed,
            max_nodes,
            max_depth,
            budget,
        } => {
            let s = load(&scenario, seed)?;
            let morrt = build_morrt(&s, &s.params).map_err(planning)?;
            let limits = OracleLimits {
                max_nodes,
                max_depth,
                budget,
            };
            let (cost, _) = enumerate_best(&morrt, &s.env, &s.initial_belief, &s.costs, limits)
                .map_err(planning)?;
            println!("oracle_cost = {cost}");
            Ok(())
        }
        Command::Validate { scenario } => {
            let s = load(&scenario, None)?;
            println!(
                "ok: {} agents, {} goal nodes, {} observation areas",
                s.num_agents(),
                s.env.num_states(),
                s.env.num_areas()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Planning(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
