//! Multi-agent motion planning under a hidden, partially observable goal.
//!
//! Agents grow RRTs that record where the team can sense the environment;
//! every such sensing point spawns new trees, one per possible reading.
//! A dynamic program then picks the cheapest contingent plan over the
//! resulting tree of RRTs.

pub mod cost;
pub mod environment;
pub mod error;
pub mod geometry;
pub mod io;
pub mod morrt;
pub mod multi_rrt;
pub mod oracle;
pub mod plan_dp;
pub mod rng;
pub mod rrt;
pub mod scenario;
pub mod simulator;
pub mod svg;

pub use cost::{CostParams, PlanBranch, PlanTree};
pub use environment::{BeliefVector, EnvModel, UnnormalizedBelief};
pub use error::{Error, Result};
pub use geometry::{Point2, Rect, Region, Workspace};
pub use morrt::{build_morrt, MorrtParams, MorrtTree};
pub use plan_dp::{best_plan, PlanSolution};
pub use scenario::{Agent, Scenario};
