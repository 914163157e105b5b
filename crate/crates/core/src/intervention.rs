//! Single-interval social distancing.
//!
//! A policy holds the reproduction number at `r_s` on `[tau_s, tau_f]` and at
//! the baseline `r0` elsewhere. Once distancing ends the final size is
//! `S_inf(r0, S(tau_f), I(tau_f))`, which never reaches `S*(r0)` for a finite
//! `tau_f`. The goldilocks number `R^g` is the `r_s` whose own final size from
//! the `tau_s` state equals `S*(r0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::final_size::{herd_immunity_threshold, s_infinity};
use crate::sir_dynamics::{
    integrate, integrate_until, EpiState, IntegrationOptions, PeakEvent, ReproductionSchedule,
    Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterventionOptions {
    pub integration: IntegrationOptions,
    /// Half-width of the band `|S(tau_f) - S*|` counted as quasi optimal.
    pub qss_band: f64,
    pub r_min: f64,
    /// Minimum simulated time after `tau_f`.
    pub tail_horizon: f64,
    /// Post-release integration continues until `i` is below this value and falling.
    pub settle_i: f64,
    /// Hard cap on post-release integration time.
    pub settle_cap: f64,
    /// Residual tolerance on the goldilocks condition.
    pub goldilocks_tol: f64,
}

impl Default for InterventionOptions {
    fn default() -> Self {
        InterventionOptions {
            integration: IntegrationOptions::default(),
            qss_band: 0.01,
            r_min: 0.1,
            tail_horizon: 200.0,
            settle_i: 1e-10,
            settle_cap: 1e7,
            goldilocks_tol: 1e-6,
        }
    }
}

impl InterventionOptions {
    pub fn validate(&self) -> Result<()> {
        self.integration.validate()?;
        for (field, v) in [
            ("qss_band", self.qss_band),
            ("r_min", self.r_min),
            ("tail_horizon", self.tail_horizon),
            ("settle_i", self.settle_i),
            ("settle_cap", self.settle_cap),
            ("goldilocks_tol", self.goldilocks_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(field, format!("{v} must be positive")));
            }
        }
        if self.settle_cap < self.tail_horizon {
            return Err(Error::validation("settle_cap", "is smaller than tail_horizon"));
        }
        Ok(())
    }
}

/// One social-distancing window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleIntervalPolicy {
    pub tau_s: f64,
    pub tau_f: f64,
    pub r_s: f64,
    pub r0: f64,
}

impl SingleIntervalPolicy {
    /// Checks `0 < tau_s < tau_f < inf` and `r_min <= r_s <= r0`.
    pub fn new(tau_s: f64, tau_f: f64, r_s: f64, r0: f64, r_min: f64) -> Result<Self> {
        let policy = SingleIntervalPolicy { tau_s, tau_f, r_s, r0 };
        policy.validate(r_min)?;
        Ok(policy)
    }

    pub fn validate(&self, r_min: f64) -> Result<()> {
        if !(self.r0 > 0.0) || !self.r0.is_finite() {
            return Err(Error::validation("r0", format!("{} must be positive", self.r0)));
        }
        if !(self.tau_s > 0.0) || !self.tau_s.is_finite() {
            return Err(Error::validation("tau_s", format!("{} must be positive", self.tau_s)));
        }
        if !self.tau_f.is_finite() || self.tau_f <= self.tau_s {
            return Err(Error::validation(
                "tau_f",
                format!("tau_f = {} must be finite and exceed tau_s = {}", self.tau_f, self.tau_s),
            ));
        }
        if !(self.r_s >= r_min && self.r_s <= self.r0) {
            return Err(Error::validation(
                "r_s",
                format!("{} is outside [r_min, r0] = [{r_min}, {}]", self.r_s, self.r0),
            ));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<ReproductionSchedule> {
        ReproductionSchedule::single_interval(self.r0, self.r_s, self.tau_s, self.tau_f)
    }
}

/// Outcome classes of a single-interval policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioClass {
    QuasiOptimal,
    SoftLongTerm,
    StrongLongTerm,
    ShortTerm,
}

impl std::fmt::Display for ScenarioClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ScenarioClass::QuasiOptimal => "quasi-optimal",
            ScenarioClass::SoftLongTerm => "soft long-term",
            ScenarioClass::StrongLongTerm => "strong long-term",
            ScenarioClass::ShortTerm => "short-term",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondWave {
    pub tau: f64,
    pub peak: f64,
}

impl From<PeakEvent> for SecondWave {
    fn from(p: PeakEvent) -> Self {
        SecondWave { tau: p.tau, peak: p.i }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub class: ScenarioClass,
    pub s_at_tf: f64,
    pub i_at_tf: f64,
    /// `S_inf(r0, S(tau_f), I(tau_f))` from the closed form.
    pub s_infinity: f64,
    /// Susceptible fraction at the end of the simulated tail.
    pub simulated_tail_s: f64,
    /// `S_inf(r_s, S(tau_s), I(tau_s))`: where distancing alone would settle.
    pub s_infinity_distancing: f64,
    pub second_wave: Option<SecondWave>,
    pub s_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub s_infinity: f64,
    pub s_star: f64,
    pub gap: f64,
}

/// State at `tau_s` under constant `r0` from `x0`.
pub fn state_at(r0: f64, x0: &EpiState, tau_s: f64, opts: &IntegrationOptions) -> Result<EpiState> {
    let schedule = ReproductionSchedule::constant(r0)?;
    Ok(integrate(x0, &schedule, tau_s, opts)?.last().state)
}

/// Peak time of the uncontrolled epidemic, if `i` rises at all.
pub fn uncontrolled_peak_time(r0: f64, x0: &EpiState, opts: &IntegrationOptions) -> Result<Option<f64>> {
    if r0 * x0.s <= 1.0 || x0.i == 0.0 {
        return Ok(None);
    }
    let schedule = ReproductionSchedule::constant(r0)?;
    let traj = integrate_until(x0, &schedule, opts.horizon_cap, opts, |_, x| r0 * x.s < 1.0)?;
    Ok(traj.events.peaks.first().map(|p| p.tau))
}

fn check_start_before_peak(r0: f64, x0: &EpiState, tau_s: f64, opts: &IntegrationOptions) -> Result<f64> {
    let tau_hat = uncontrolled_peak_time(r0, x0, opts)?.ok_or_else(|| {
        Error::PreconditionViolation(format!("no outbreak from s0 = {} under r0 = {r0}", x0.s))
    })?;
    if !(tau_s > 0.0 && tau_s < tau_hat) {
        return Err(Error::PreconditionViolation(format!(
            "tau_s = {tau_s} must lie in (0, tau_hat(r0) = {tau_hat})"
        )));
    }
    Ok(tau_hat)
}

/// Goldilocks reproduction number `R^g(tau_s)`.
///
/// Bisection on `g(r) = S_inf(r, S(tau_s), I(tau_s)) - S*(r0)`, which decreases
/// in `r`; the bracket is `[1 + 1e-6, r0]`, widened down to `r_min` if needed.
pub fn goldilocks_r(r0: f64, x0: &EpiState, tau_s: f64, opts: &InterventionOptions) -> Result<f64> {
    if !(r0 > 1.0) {
        return Err(Error::PreconditionViolation(format!("r0 = {r0} must exceed 1")));
    }
    check_start_before_peak(r0, x0, tau_s, &opts.integration)?;
    let start = state_at(r0, x0, tau_s, &opts.integration)?;
    let s_star = herd_immunity_threshold(r0)?;
    let g = |r: f64| s_infinity(r, start.s, start.i).map(|v| v - s_star);

    let mut hi = r0;
    if g(hi)? >= 0.0 {
        return Err(Error::NoSolution(format!(
            "S_inf(r0) already reaches S* from the tau_s = {tau_s} state"
        )));
    }
    let mut lo = 1.0 + 1e-6;
    if g(lo)? <= 0.0 {
        lo = opts.r_min;
        if g(lo)? <= 0.0 {
            return Err(Error::NoSolution(format!(
                "S_inf stays below S* = {s_star} for every r in [{}, {r0}]",
                opts.r_min
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    let r_g = 0.5 * (lo + hi);
    let residual = g(r_g)?.abs();
    if residual > opts.goldilocks_tol {
        return Err(Error::NoSolution(format!(
            "bisection ended with residual {residual:e} above {}",
            opts.goldilocks_tol
        )));
    }
    Ok(r_g)
}

/// Goldilocks distancing from `tau_s`, held until `multiplier` times the peak
/// time of the controlled epidemic.
///
/// The peak time is measured from `tau = 0` on the switched trajectory, so
/// `tau_f = multiplier * tau_hat`. This is later than `tau_s + tau_qss(r_s)`
/// for every `multiplier >= 5`.
pub fn quasi_optimal_policy(
    r0: f64,
    x0: &EpiState,
    tau_s: f64,
    multiplier: f64,
    opts: &InterventionOptions,
) -> Result<SingleIntervalPolicy> {
    if !(multiplier >= 5.0) || !multiplier.is_finite() {
        return Err(Error::validation(
            "qss_multiplier",
            format!("{multiplier} must be at least 5"),
        ));
    }
    let r_g = goldilocks_r(r0, x0, tau_s, opts)?;
    let tau_hat = controlled_peak_time(r0, r_g, x0, tau_s, &opts.integration)?;
    SingleIntervalPolicy::new(tau_s, multiplier * tau_hat, r_g, r0, opts.r_min)
}

/// First peak of `i` when `r_s` is applied from `tau_s` onwards.
pub fn controlled_peak_time(
    r0: f64,
    r_s: f64,
    x0: &EpiState,
    tau_s: f64,
    opts: &IntegrationOptions,
) -> Result<f64> {
    let schedule = ReproductionSchedule::new(vec![
        crate::sir_dynamics::Segment { start: 0.0, r: r0 },
        crate::sir_dynamics::Segment { start: tau_s, r: r_s },
    ])?;
    let traj = integrate_until(x0, &schedule, tau_s + opts.horizon_cap, opts, |tau, x| {
        tau > tau_s && r_s * x.s < 1.0
    })?;
    traj.events
        .peaks
        .first()
        .map(|p| p.tau)
        .ok_or_else(|| Error::PreconditionViolation("infected fraction never peaks".into()))
}

/// Simulates the three phases of a policy and keeps integrating after `tau_f`
/// until the epidemic has settled (`i < settle_i`, `s <= S*`), for at least
/// `tail_horizon`.
pub fn simulate_policy(
    policy: &SingleIntervalPolicy,
    x0: &EpiState,
    opts: &InterventionOptions,
) -> Result<Trajectory> {
    policy.validate(opts.r_min)?;
    let schedule = policy.schedule()?;
    let (r0, tau_f) = (policy.r0, policy.tau_f);
    let earliest_stop = tau_f + opts.tail_horizon;
    integrate_until(x0, &schedule, tau_f + opts.settle_cap, &opts.integration, |tau, x| {
        tau >= earliest_stop && x.i < opts.settle_i && r0 * x.s <= 1.0
    })
}

/// Classifies a policy into one of the four outcome scenarios.
///
/// Short term when `I(tau_f)` is still at or above the QSS threshold; otherwise
/// quasi optimal inside the band around `S*`, soft below it, strong above it.
pub fn classify_scenario(
    policy: &SingleIntervalPolicy,
    x0: &EpiState,
    opts: &InterventionOptions,
) -> Result<ScenarioReport> {
    let traj = simulate_policy(policy, x0, opts)?;
    classify_trajectory(policy, &traj, opts)
}

/// Classification of an already simulated policy trajectory.
pub fn classify_trajectory(
    policy: &SingleIntervalPolicy,
    traj: &Trajectory,
    opts: &InterventionOptions,
) -> Result<ScenarioReport> {
    let s_star = herd_immunity_threshold(policy.r0)?;
    let at = |tau: f64| {
        traj.state_at(tau).ok_or_else(|| {
            Error::PreconditionViolation(format!("trajectory does not reach tau = {tau}"))
        })
    };
    let at_s = at(policy.tau_s)?;
    let at_f = at(policy.tau_f)?;
    let s_inf = s_infinity(policy.r0, at_f.s, at_f.i)?;
    let s_inf_distancing = s_infinity(policy.r_s, at_s.s, at_s.i)?;

    let class = if at_f.i >= opts.integration.i_qss_threshold {
        ScenarioClass::ShortTerm
    } else if (at_f.s - s_star).abs() <= opts.qss_band {
        ScenarioClass::QuasiOptimal
    } else if at_f.s < s_star {
        ScenarioClass::SoftLongTerm
    } else {
        ScenarioClass::StrongLongTerm
    };

    let second_wave = if class == ScenarioClass::StrongLongTerm {
        let wave = traj
            .events
            .peaks
            .iter()
            .find(|p| p.tau > policy.tau_f)
            .copied()
            .ok_or_else(|| Error::NoSolution("no second wave within the simulated tail".into()))?;
        Some(wave.into())
    } else {
        None
    };

    Ok(ScenarioReport {
        class,
        s_at_tf: at_f.s,
        i_at_tf: at_f.i,
        s_infinity: s_inf,
        simulated_tail_s: traj.last().state.s,
        s_infinity_distancing: s_inf_distancing,
        second_wave,
        s_star,
    })
}

/// Gap between the herd immunity threshold and the final size a policy reaches.
pub fn upper_bound_check(
    policy: &SingleIntervalPolicy,
    x0: &EpiState,
    opts: &InterventionOptions,
) -> Result<UpperBound> {
    let traj = simulate_policy(policy, x0, opts)?;
    let at_f = traj
        .state_at(policy.tau_f)
        .ok_or_else(|| Error::PreconditionViolation("trajectory does not reach tau_f".into()))?;
    let s_inf = s_infinity(policy.r0, at_f.s, at_f.i)?;
    let s_star = herd_immunity_threshold(policy.r0)?;
    Ok(UpperBound {
        s_infinity: s_inf,
        s_star,
        gap: s_star - s_inf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x0() -> EpiState {
        EpiState::outbreak(0.005).unwrap()
    }

    fn opts() -> InterventionOptions {
        InterventionOptions::default()
    }

    /// Fixed-step downward scan from r0, stopping at the first r whose final
    /// size exceeds S*.
    fn goldilocks_scan(r0: f64, start: &EpiState, step: f64) -> f64 {
        let s_star = 1.0 / r0;
        let mut r = r0;
        let mut s_inf = s_infinity(r, start.s, start.i).unwrap();
        while s_inf <= s_star {
            r -= step;
            s_inf = s_infinity(r, start.s, start.i).unwrap();
        }
        r
    }

    #[test]
    fn policy_validation() {
        assert!(SingleIntervalPolicy::new(2.0, 21.6, 1.4, 2.5, 0.1).is_ok());
        let err = SingleIntervalPolicy::new(2.0, 1.0, 1.4, 2.5, 0.1).unwrap_err();
        assert!(err.to_string().contains("tau_f") && err.to_string().contains("tau_s"));
        assert!(SingleIntervalPolicy::new(0.0, 5.0, 1.4, 2.5, 0.1).is_err());
        assert!(SingleIntervalPolicy::new(2.0, f64::INFINITY, 1.4, 2.5, 0.1).is_err());
        assert!(SingleIntervalPolicy::new(2.0, 5.0, 0.05, 2.5, 0.1).is_err());
        assert!(SingleIntervalPolicy::new(2.0, 5.0, 3.0, 2.5, 0.1).is_err());
    }

    #[test]
    fn goldilocks_matches_scan_oracle() {
        let start = state_at(2.5, &x0(), 2.0, &IntegrationOptions::default()).unwrap();
        let scan = goldilocks_scan(2.5, &start, 1e-4);
        let r_g = goldilocks_r(2.5, &x0(), 2.0, &opts()).unwrap();
        assert!(r_g <= scan + 1e-4 && r_g >= scan - 1e-9, "r_g={r_g} scan={scan}");
        assert!((r_g - 1.4157).abs() < 5e-4);
        let residual = s_infinity(r_g, start.s, start.i).unwrap() - 0.4;
        assert!(residual.abs() < 1e-6);
    }

    #[test]
    fn goldilocks_earlier_start() {
        let r1 = goldilocks_r(2.5, &x0(), 1.0, &opts()).unwrap();
        let r2 = goldilocks_r(2.5, &x0(), 2.0, &opts()).unwrap();
        assert!(r1 > r2 && r1 < 2.5);
        let start = state_at(2.5, &x0(), 1.0, &IntegrationOptions::default()).unwrap();
        let scan = goldilocks_scan(2.5, &start, 1e-4);
        assert!((r1 - scan).abs() <= 1e-4);
    }

    #[test]
    fn goldilocks_preconditions() {
        assert!(matches!(
            goldilocks_r(2.5, &x0(), 5.0, &opts()),
            Err(Error::PreconditionViolation(_))
        ));
        assert!(matches!(
            goldilocks_r(0.9, &x0(), 1.0, &opts()),
            Err(Error::PreconditionViolation(_))
        ));
        assert!(goldilocks_r(2.5, &x0(), 0.0, &opts()).is_err());
    }

    #[test]
    fn quasi_optimal_timing() {
        let policy = quasi_optimal_policy(2.5, &x0(), 2.0, 6.0, &opts()).unwrap();
        // controlled peak at tau ~ 3.6, so tau_f ~ 21.6
        assert!((policy.tau_f / 6.0 - 3.6).abs() < 0.1, "tau_f = {}", policy.tau_f);
        let start = state_at(2.5, &x0(), 2.0, &IntegrationOptions::default()).unwrap();
        let tau_qss = crate::sir_dynamics::qss_time(
            policy.r_s,
            &start,
            5.0,
            &IntegrationOptions::default(),
        )
        .unwrap();
        assert!(policy.tau_f > policy.tau_s + tau_qss);
        assert!(quasi_optimal_policy(2.5, &x0(), 2.0, 4.0, &opts()).is_err());
    }

    #[test]
    fn longer_distancing_gets_closer_to_threshold() {
        let p6 = quasi_optimal_policy(2.5, &x0(), 2.0, 6.0, &opts()).unwrap();
        let p10 = quasi_optimal_policy(2.5, &x0(), 2.0, 10.0, &opts()).unwrap();
        let r6 = classify_scenario(&p6, &x0(), &opts()).unwrap();
        let r10 = classify_scenario(&p10, &x0(), &opts()).unwrap();
        assert_eq!(r6.class, ScenarioClass::QuasiOptimal);
        assert!((r6.s_infinity - 0.4).abs() < 0.015);
        assert!((0.4 - r10.s_infinity) < (0.4 - r6.s_infinity));
        assert!(r10.s_infinity < 0.4);
    }

    #[test]
    fn classification_examples() {
        let o = opts();
        let soft = SingleIntervalPolicy::new(2.0, 21.6, 1.8, 2.5, o.r_min).unwrap();
        let rep = classify_scenario(&soft, &x0(), &o).unwrap();
        assert_eq!(rep.class, ScenarioClass::SoftLongTerm);
        assert!((rep.s_infinity - 0.2453).abs() < 0.005);
        assert!(rep.second_wave.is_none());

        let strong = SingleIntervalPolicy::new(2.0, 21.6, 0.85, 2.5, o.r_min).unwrap();
        let rep = classify_scenario(&strong, &x0(), &o).unwrap();
        assert_eq!(rep.class, ScenarioClass::StrongLongTerm);
        assert!((rep.s_at_tf - 0.70).abs() < 0.01);
        assert!((rep.s_infinity_distancing - 0.70).abs() < 0.01);
        assert!((rep.s_infinity - 0.1989).abs() < 0.005);
        let wave = rep.second_wave.unwrap();
        assert!(wave.tau > 21.6 && wave.peak > 0.05);

        let short = SingleIntervalPolicy::new(2.0, 8.0, 1.3, 2.5, o.r_min).unwrap();
        let rep = classify_scenario(&short, &x0(), &o).unwrap();
        assert_eq!(rep.class, ScenarioClass::ShortTerm);
        assert!(rep.second_wave.is_none());
        assert!((rep.s_infinity - rep.simulated_tail_s).abs() < 1e-3);
        assert!(rep.s_infinity < rep.s_star);
    }

    #[test]
    fn upper_bound_gaps() {
        let o = opts();
        let qo = SingleIntervalPolicy::new(2.0, 21.6, 1.4157, 2.5, o.r_min).unwrap();
        let ub = upper_bound_check(&qo, &x0(), &o).unwrap();
        assert!(ub.gap > 0.0 && ub.gap < 0.0058 + 0.005);
        let soft = SingleIntervalPolicy::new(2.0, 21.6, 1.8, 2.5, o.r_min).unwrap();
        let ub = upper_bound_check(&soft, &x0(), &o).unwrap();
        assert!((ub.gap - 0.1547).abs() < 0.005);
    }
}
