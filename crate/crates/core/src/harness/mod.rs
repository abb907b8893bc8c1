//! Experiment configuration, the evaluation protocol, aggregation and
//! output files.

pub mod config;
pub mod output;
pub mod run;
pub mod stats;

pub use config::{
    apply_preset, load_config, Experiment, ExperimentConfig, ScatterConfig, SweepConfig, TopologySource, PRESETS,
};
pub use output::{emit_outputs, ConfigOutcome};
pub use run::{detect_plateau, evaluate_policy, run_experiment, run_seed, RunResult, RunRow, SeedOutcome, StopReason};
pub use stats::{aggregate_runs, median, Summary};
