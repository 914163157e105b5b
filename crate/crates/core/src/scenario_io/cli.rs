use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use super::config::{parse_config, PolicySpec, ScenarioConfig};
use super::reproduce::{format_table, reproduce_paper};
use super::run::{resolve_output, run_scenario};
use crate::error::{Error, Result};
use crate::final_size::{herd_immunity_threshold, s_infinity};
use crate::intervention::{classify_scenario, goldilocks_r, quasi_optimal_policy, InterventionOptions};
use crate::sir_dynamics::{
    fmt17, nondimensionalize, trajectory_csv, DimensionalParams, EpiState, IntegrationOptions,
    ReproductionSchedule, DEFAULT_EPSILON,
};
use crate::stability::{default_starts, final_size_level_set, phase_portrait};

#[derive(Debug, Parser)]
#[command(name = "sirgold", version, about = "Goldilocks social distancing in the SIR model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a scenario and export the trajectory.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Trajectory CSV path (stdout when neither --csv nor --json is given).
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Uniform output spacing in tau.
        #[arg(long)]
        output_step: Option<f64>,
    },
    /// Final susceptible fraction and herd immunity threshold.
    FinalSize {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        s0: f64,
        #[arg(long)]
        i0: f64,
    },
    /// Goldilocks reproduction number for a distancing start time.
    Goldilocks {
        #[arg(long, default_value_t = 2.5)]
        r0: f64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        eps: f64,
        #[arg(long)]
        tau_s: f64,
        /// Residual tolerance on the goldilocks condition.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Classify a single-interval policy and print the report as JSON.
    Classify {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Quasi-optimal policy for a start time, with its report.
    Optimize {
        #[arg(long, default_value_t = 2.5)]
        r0: f64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        eps: f64,
        #[arg(long)]
        tau_s: f64,
        /// tau_f as a multiple of the controlled peak time.
        #[arg(long, default_value_t = 6.0)]
        multiplier: f64,
    },
    /// Trajectories from twelve starts on the c = 0 edge, as CSV `curve,tau,s,i`.
    PhasePortrait {
        #[arg(long, default_value_t = 2.5)]
        r: f64,
        #[arg(long, default_value_t = 40.0)]
        tau_end: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Level curves of `S* - S_inf` as CSV `level,s,i`.
    LevelCurves {
        #[arg(long, default_value_t = 2.5)]
        r: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.3")]
        levels: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the reference scenarios and compare with the published values.
    ReproducePaper {
        /// Print the comparison rows as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// TOML scenario file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    r0: Option<f64>,
    /// Transmission rate; with --gamma sets r0 = beta / gamma.
    #[arg(long, requires = "gamma")]
    beta: Option<f64>,
    /// Recovery rate per day; times given on the command line are then in days.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    tau_s: Option<f64>,
    #[arg(long)]
    tau_f: Option<f64>,
    #[arg(long)]
    r_s: Option<f64>,
    #[arg(long)]
    tau_end: Option<f64>,
}

impl ScenarioArgs {
    fn to_config(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
            None => ScenarioConfig::new(self.r0.unwrap_or(2.5)),
        };
        let to_tau = |t: f64| -> Result<f64> {
            match self.gamma {
                Some(gamma) => {
                    let p = DimensionalParams::new(self.beta.unwrap_or(gamma), gamma)?;
                    Ok(nondimensionalize(&p, t).1)
                }
                None => Ok(t),
            }
        };
        if let Some(r0) = self.r0 {
            cfg.r0 = r0;
        }
        if let (Some(beta), Some(gamma)) = (self.beta, self.gamma) {
            cfg.r0 = nondimensionalize(&DimensionalParams::new(beta, gamma)?, 0.0).0;
        }
        if let Some(eps) = self.eps {
            cfg.epsilon = eps;
        }
        if let Some(t) = self.tau_end {
            cfg.tau_end = Some(to_tau(t)?);
        }
        let (base_s, base_f, base_r) = match cfg.policy {
            Some(PolicySpec::Explicit { tau_s, tau_f, r_s }) => (Some(tau_s), Some(tau_f), Some(r_s)),
            _ => (None, None, None),
        };
        let given = [self.tau_s, self.tau_f, self.r_s];
        if given.iter().any(Option::is_some) {
            let pick = |flag: Option<f64>, base: Option<f64>, name: &str| {
                flag.map(&to_tau)
                    .transpose()?
                    .or(base)
                    .ok_or_else(|| Error::validation(name, "required when any policy flag is given"))
            };
            cfg.policy = Some(PolicySpec::Explicit {
                tau_s: pick(self.tau_s, base_s, "tau_s")?,
                tau_f: pick(self.tau_f, base_f, "tau_f")?,
                r_s: self.r_s.or(base_r).ok_or_else(|| {
                    Error::validation("r_s", "required when any policy flag is given")
                })?,
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: &mut dyn Write, path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(path) => {
            let path = resolve_output(path);
            std::fs::write(&path, text)?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes") + "\n"
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Simulate { scenario, csv, json: json_path, output_step } => {
            let mut cfg = scenario.to_config()?;
            if csv.is_some() {
                cfg.output.trajectory_csv = csv;
            }
            if json_path.is_some() {
                cfg.output.trajectory_json = json_path;
            }
            if output_step.is_some() {
                cfg.integrator.output_step = output_step;
            }
            cfg.validate()?;
            let to_stdout = cfg.output.trajectory_csv.is_none() && cfg.output.trajectory_json.is_none();
            let artifact = run_scenario(&cfg)?;
            if to_stdout {
                let traj = artifact.trajectory.as_ref().expect("run keeps its trajectory");
                out.write_all(trajectory_csv(traj).as_bytes())?;
            } else {
                out.write_all(json(&artifact).as_bytes())?;
            }
        }
        Command::FinalSize { r, s0, i0 } => {
            let s_inf = s_infinity(r, s0, i0)?;
            let s_star = herd_immunity_threshold(r)?;
            writeln!(out, "S_inf = {s_inf:.10}")?;
            writeln!(out, "S_star = {s_star:.10}")?;
        }
        Command::Goldilocks { r0, eps, tau_s, tol } => {
            let mut opts = InterventionOptions::default();
            if let Some(tol) = tol {
                opts.goldilocks_tol = tol;
                opts.validate()?;
            }
            let r_g = goldilocks_r(r0, &EpiState::outbreak(eps)?, tau_s, &opts)?;
            writeln!(out, "R_g = {r_g:.10}")?;
        }
        Command::Classify { scenario } => {
            let cfg = scenario.to_config()?;
            if cfg.policy.is_none() {
                return Err(Error::validation("policy", "classify needs --tau-s, --tau-f and --r-s or a policy section"));
            }
            let artifact = run_scenario(&cfg)?;
            out.write_all(json(&artifact.report).as_bytes())?;
        }
        Command::Optimize { r0, eps, tau_s, multiplier } => {
            let opts = InterventionOptions::default();
            let x0 = EpiState::outbreak(eps)?;
            let policy = quasi_optimal_policy(r0, &x0, tau_s, multiplier, &opts)?;
            let report = classify_scenario(&policy, &x0, &opts)?;
            let value = serde_json::json!({ "policy": policy, "report": report });
            out.write_all(json(&value).as_bytes())?;
        }
        Command::PhasePortrait { r, tau_end, out: path } => {
            let schedule = ReproductionSchedule::constant(r)?;
            let opts = IntegrationOptions { output_step: Some(0.1), ..IntegrationOptions::default() };
            let trajs = phase_portrait(&schedule, &default_starts(), tau_end, &opts)?;
            let mut text = String::from("curve,tau,s,i\n");
            for (k, traj) in trajs.iter().enumerate() {
                for smp in &traj.samples {
                    text += &format!("{k},{},{},{}\n", fmt17(smp.tau), fmt17(smp.state.s), fmt17(smp.state.i));
                }
            }
            emit(out, path.as_ref(), &text)?;
        }
        Command::LevelCurves { r, levels, n, out: path } => {
            let mut text = String::from("level,s,i\n");
            for level in levels {
                match final_size_level_set(r, level, n) {
                    Ok(curve) => {
                        for (s, i) in curve.points {
                            text += &format!("{},{},{}\n", fmt17(level), fmt17(s), fmt17(i));
                        }
                    }
                    Err(e @ Error::EmptyCurve { .. }) => writeln!(err, "warning: {e}")?,
                    Err(e) => return Err(e),
                }
            }
            emit(out, path.as_ref(), &text)?;
        }
        Command::ReproducePaper { json: as_json } => {
            let (rows, _) = reproduce_paper(&InterventionOptions::default())?;
            if as_json {
                out.write_all(json(&rows).as_bytes())?;
            } else {
                out.write_all(format_table(&rows).as_bytes())?;
            }
            let failed = rows.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                writeln!(err, "{failed} of {} comparisons outside tolerance", rows.len())?;
                return Ok(2);
            }
        }
    }
    Ok(0)
}
