//! Scenario configuration, reproducible runs and the command-line front end.

mod cli;
mod config;
pub mod reproduce;
mod run;

pub use cli::run_cli;
pub use config::{
    parse_config, IntegratorConfig, OutputPaths, PolicySpec, ScenarioConfig, Thresholds,
    DEFAULT_GOLDILOCKS_MULTIPLIER,
};
pub use run::{
    resolve_output, resolve_policy, run_scenario, RunArtifact, DEFAULT_BASELINE_HORIZON,
    OUT_DIR_ENV, TOOLKIT_VERSION,
};
