//! Monte-Carlo studies: configuration, seeded trial runner, aggregation and
//! result emission.

pub mod config;
pub mod emit;
pub mod plot;
pub mod runner;

pub use config::{ExperimentConfig, Horizon, ThresholdBySnr};
pub use emit::emit_results;
pub use runner::{
    ber_table, run_experiment, run_scenario, run_trial, scenarios, stepsize_demo, trial_seed, AggregateResult,
    BerRow, MseCurve, Scenario, ScenarioResult, StepSample,
};
