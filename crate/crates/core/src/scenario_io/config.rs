//! TOML scenario configuration.
//!
//! ```toml
//! r0 = 2.5
//! epsilon = 0.005          # default 0.005
//! tau_end = 250.0          # optional horizon
//!
//! [policy]
//! kind = "explicit"        # or "goldilocks" with tau_s and qss_multiplier
//! tau_s = 2.0
//! tau_f = 21.6
//! r_s = 1.4157
//!
//! [integrator]             # rel_tol 1e-9, abs_tol 1e-12, max_step 1.0
//! [thresholds]             # i_qss_threshold 1e-3, qss_band 0.01, r_min 0.1, tail_horizon 200
//! [output]                 # trajectory_csv, trajectory_json, report_json
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervention::{InterventionOptions, SingleIntervalPolicy};
use crate::sir_dynamics::{IntegrationOptions, DEFAULT_EPSILON, DEFAULT_I_QSS_THRESHOLD};

pub const DEFAULT_GOLDILOCKS_MULTIPLIER: f64 = 5.0;

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_multiplier() -> f64 {
    DEFAULT_GOLDILOCKS_MULTIPLIER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub r0: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicySpec>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub output: OutputPaths,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    Explicit { tau_s: f64, tau_f: f64, r_s: f64 },
    Goldilocks {
        tau_s: f64,
        #[serde(default = "default_multiplier")]
        qss_multiplier: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let d = IntegrationOptions::default();
        IntegratorConfig {
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            max_step: d.max_step,
            output_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub i_qss_threshold: f64,
    pub qss_band: f64,
    pub r_min: f64,
    pub tail_horizon: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        let d = InterventionOptions::default();
        Thresholds {
            i_qss_threshold: DEFAULT_I_QSS_THRESHOLD,
            qss_band: d.qss_band,
            r_min: d.r_min,
            tail_horizon: d.tail_horizon,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory_csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory_json: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_json: Option<PathBuf>,
}

impl ScenarioConfig {
    /// Minimal configuration with all defaults applied.
    pub fn new(r0: f64) -> Self {
        ScenarioConfig {
            r0,
            epsilon: DEFAULT_EPSILON,
            tau_end: None,
            policy: None,
            integrator: IntegratorConfig::default(),
            thresholds: Thresholds::default(),
            output: OutputPaths::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0) || !self.r0.is_finite() {
            return Err(Error::validation("r0", format!("{} must be positive", self.r0)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::validation("epsilon", format!("{} must lie in (0, 1)", self.epsilon)));
        }
        if let Some(tau_end) = self.tau_end {
            if !(tau_end > 0.0) || !tau_end.is_finite() {
                return Err(Error::validation("tau_end", format!("{tau_end} must be positive")));
            }
        }
        self.intervention_options().validate()?;
        match self.policy {
            Some(PolicySpec::Explicit { tau_s, tau_f, r_s }) => {
                SingleIntervalPolicy::new(tau_s, tau_f, r_s, self.r0, self.thresholds.r_min)
                    .map(drop)
                    .map_err(|e| match e {
                        Error::Validation { field, message } => Error::Validation {
                            field: format!("policy.{field}"),
                            message,
                        },
                        other => other,
                    })?;
            }
            Some(PolicySpec::Goldilocks { tau_s, qss_multiplier }) => {
                if !(tau_s > 0.0) || !tau_s.is_finite() {
                    return Err(Error::validation("policy.tau_s", format!("{tau_s} must be positive")));
                }
                if !(qss_multiplier >= 5.0) || !qss_multiplier.is_finite() {
                    return Err(Error::validation(
                        "policy.qss_multiplier",
                        format!("{qss_multiplier} must be at least 5"),
                    ));
                }
            }
            None => {}
        }
        Ok(())
    }

    pub fn integration_options(&self) -> IntegrationOptions {
        IntegrationOptions {
            rel_tol: self.integrator.rel_tol,
            abs_tol: self.integrator.abs_tol,
            max_step: self.integrator.max_step,
            output_step: self.integrator.output_step,
            i_qss_threshold: self.thresholds.i_qss_threshold,
            ..IntegrationOptions::default()
        }
    }

    pub fn intervention_options(&self) -> InterventionOptions {
        InterventionOptions {
            integration: self.integration_options(),
            qss_band: self.thresholds.qss_band,
            r_min: self.thresholds.r_min,
            tail_horizon: self.thresholds.tail_horizon,
            ..InterventionOptions::default()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

/// Parses and validates a TOML scenario document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("r0 = 2.5").unwrap();
        assert_eq!(cfg.epsilon, 0.005);
        assert_eq!(cfg.integrator.rel_tol, 1e-9);
        assert_eq!(cfg.integrator.abs_tol, 1e-12);
        assert_eq!(cfg.thresholds.qss_band, 0.01);
        assert!(cfg.policy.is_none());
    }

    #[test]
    fn reversed_window_names_both_fields() {
        let err = parse_config(
            "r0 = 2.5\n[policy]\nkind = \"explicit\"\ntau_s = 5.0\ntau_f = 3.0\nr_s = 1.2\n",
        )
        .unwrap_err();
        match err {
            Error::Validation { field, message } => {
                assert_eq!(field, "policy.tau_f");
                assert!(message.contains("tau_s"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(parse_config("r0 = 2.5\nepsi1on = 0.1"), Err(Error::Parse(_))));
        assert!(matches!(
            parse_config("r0 = 2.5\n[thresholds]\nqss_bnad = 0.1"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_config("r0 = 2.5\n[policy]\nkind = \"goldilocks\"\ntau_s = 2.0\ntau_f = 3.0"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(parse_config("r0 = "), Err(Error::Parse(_))));
    }

    #[test]
    fn quasi_optimal_setup() {
        let cfg = parse_config(
            r#"
r0 = 2.5
epsilon = 0.005
[policy]
kind = "explicit"
tau_s = 2.0
tau_f = 21.6
r_s = 1.4157
"#,
        )
        .unwrap();
        assert_eq!(
            cfg.policy,
            Some(PolicySpec::Explicit { tau_s: 2.0, tau_f: 21.6, r_s: 1.4157 })
        );
        let gold = parse_config("r0 = 2.5\n[policy]\nkind = \"goldilocks\"\ntau_s = 2.0\n").unwrap();
        assert_eq!(gold.policy, Some(PolicySpec::Goldilocks { tau_s: 2.0, qss_multiplier: 5.0 }));
        assert!(parse_config("r0 = 2.5\n[policy]\nkind = \"goldilocks\"\ntau_s = 2.0\nqss_multiplier = 3.0\n").is_err());
    }

    #[test]
    fn invalid_values() {
        assert!(matches!(parse_config("r0 = -1.0"), Err(Error::Validation { .. })));
        assert!(matches!(parse_config("r0 = 2.5\nepsilon = 1.5"), Err(Error::Validation { .. })));
        assert!(matches!(
            parse_config("r0 = 2.5\n[integrator]\nrel_tol = 0.0"),
            Err(Error::Validation { .. })
        ));
    }
}
