use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{PolicySpec, ScenarioConfig};
use crate::error::Result;
use crate::intervention::{
    classify_trajectory, quasi_optimal_policy, simulate_policy, ScenarioReport, SingleIntervalPolicy,
};
use crate::sir_dynamics::{integrate, trajectory_csv, trajectory_json, EpiState, ReproductionSchedule, Trajectory};

/// Relative output paths are resolved against this directory when it is set.
pub const OUT_DIR_ENV: &str = "SIRGOLD_OUT_DIR";

/// Horizon of a run without any policy.
pub const DEFAULT_BASELINE_HORIZON: f64 = 200.0;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub version: String,
    pub config: ScenarioConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<SingleIntervalPolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ScenarioReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory_file: Option<PathBuf>,
    pub samples: usize,
    /// SHA-256 over the config echo, the trajectory CSV and the report.
    pub digest: String,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<PathBuf> {
    let path = resolve_output(path);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&path, contents)?;
    Ok(path)
}

/// Resolves the configured policy, if any.
pub fn resolve_policy(cfg: &ScenarioConfig, x0: &EpiState) -> Result<Option<SingleIntervalPolicy>> {
    let opts = cfg.intervention_options();
    Ok(match cfg.policy {
        None => None,
        Some(PolicySpec::Explicit { tau_s, tau_f, r_s }) => Some(SingleIntervalPolicy::new(
            tau_s,
            tau_f,
            r_s,
            cfg.r0,
            opts.r_min,
        )?),
        Some(PolicySpec::Goldilocks { tau_s, qss_multiplier }) => {
            Some(quasi_optimal_policy(cfg.r0, x0, tau_s, qss_multiplier, &opts)?)
        }
    })
}

/// Simulates, classifies and exports one scenario.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunArtifact> {
    cfg.validate()?;
    let x0 = EpiState::outbreak(cfg.epsilon)?;
    let mut opts = cfg.intervention_options();
    let policy = resolve_policy(cfg, &x0)?;

    let (traj, report) = match &policy {
        Some(policy) => {
            if let Some(tau_end) = cfg.tau_end {
                opts.tail_horizon = opts.tail_horizon.max(tau_end - policy.tau_f);
            }
            let traj = simulate_policy(policy, &x0, &opts)?;
            let report = classify_trajectory(policy, &traj, &opts)?;
            (traj, Some(report))
        }
        None => {
            let schedule = ReproductionSchedule::constant(cfg.r0)?;
            let tau_end = cfg.tau_end.unwrap_or(DEFAULT_BASELINE_HORIZON);
            (integrate(&x0, &schedule, tau_end, &opts.integration)?, None)
        }
    };

    let csv = trajectory_csv(&traj);
    let report_json = serde_json::to_string_pretty(&report).expect("report serializes");
    let mut hasher = Sha256::new();
    hasher.update(TOOLKIT_VERSION.as_bytes());
    hasher.update(cfg.to_toml().as_bytes());
    hasher.update(csv.as_bytes());
    hasher.update(report_json.as_bytes());
    let digest = hex::encode(hasher.finalize());

    let mut trajectory_file = None;
    if let Some(path) = &cfg.output.trajectory_csv {
        trajectory_file = Some(write_file(path, &csv)?);
    }
    if let Some(path) = &cfg.output.trajectory_json {
        let written = write_file(path, &trajectory_json(&traj))?;
        trajectory_file.get_or_insert(written);
    }
    if let Some(path) = &cfg.output.report_json {
        write_file(path, &report_json)?;
    }

    Ok(RunArtifact {
        version: TOOLKIT_VERSION.to_string(),
        config: cfg.clone(),
        policy,
        report,
        trajectory_file,
        samples: traj.samples.len(),
        digest,
        trajectory: Some(traj),
    })
}
