//! Scenario files and experiment orchestration.
//!
//! Scenario files are flat `key=value` lines (`#` starts a comment). Values
//! resolve as built-in defaults, then the file, then command-line flags.

mod runner;
mod scenario;

pub use runner::{
    build_topology, run_experiment, run_one, seed_base_from_env, summarize, write_outputs, write_runs_csv,
    write_summary_csv, ArmSummary, Estimate, Report, RunError, RunResult, RUNS_HEADER, SEED_BASE_ENV, SUMMARY_HEADER,
};
pub use scenario::{Arm, Scenario, ScenarioError, SeedSpec};
