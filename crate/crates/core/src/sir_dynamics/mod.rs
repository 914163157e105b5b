//! Nondimensional SIR dynamics under piecewise-constant reproduction numbers.
//!
//! The state is `(s, i, c)` on the unit simplex, time is `tau = t * gamma`
//! and the flow is
//!
//! ```text
//! ds/dtau = -r s i
//! di/dtau =  r s i - i
//! dc/dtau =  i
//! ```

mod export;
mod integrator;

pub(crate) use export::fmt17;
pub use export::{trajectory_csv, trajectory_json, CSV_HEADER};
pub use integrator::{integrate, integrate_until, IntegrationOptions, DEFAULT_I_QSS_THRESHOLD};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `s + i + c = 1` accepted when building a state.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Default outbreak seed `epsilon` for the initial state `(1 - eps, eps, 0)`.
pub const DEFAULT_EPSILON: f64 = 0.005;

/// Default multiplier in `tau_qss = multiplier * tau_hat`.
pub const DEFAULT_QSS_MULTIPLIER: f64 = 5.0;

/// A point `(s, i, c)` of the unit simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpiState {
    pub s: f64,
    pub i: f64,
    pub c: f64,
}

impl EpiState {
    pub fn new(s: f64, i: f64, c: f64) -> Result<Self> {
        for (name, v) in [("s", s), ("i", i), ("c", c)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidState(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        let total = s + i + c;
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidState(format!("s + i + c = {total} != 1")));
        }
        Ok(EpiState { s, i, c })
    }

    /// Outbreak state `(1 - eps, eps, 0)`.
    pub fn outbreak(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidState(format!("epsilon = {epsilon} must lie in (0, 1)")));
        }
        EpiState::new(1.0 - epsilon, epsilon, 0.0)
    }

    /// Disease-free equilibrium `(s_bar, 0, 1 - s_bar)`.
    pub fn equilibrium(s_bar: f64) -> Result<Self> {
        EpiState::new(s_bar, 0.0, 1.0 - s_bar)
    }

    pub fn total(&self) -> f64 {
        self.s + self.i + self.c
    }

    pub(crate) fn to_array(self) -> [f64; 3] {
        [self.s, self.i, self.c]
    }

    /// Builds a state from integrator output, clamping each component to [0, 1].
    pub(crate) fn from_array_clamped(y: [f64; 3]) -> Self {
        EpiState {
            s: y[0].clamp(0.0, 1.0),
            i: y[1].clamp(0.0, 1.0),
            c: y[2].clamp(0.0, 1.0),
        }
    }
}

/// Right-hand side of the SIR flow.
pub fn derivatives(state: &EpiState, r: f64) -> (f64, f64, f64) {
    let [ds, di, dc] = rhs([state.s, state.i, state.c], r);
    (ds, di, dc)
}

#[inline]
pub(crate) fn rhs(y: [f64; 3], r: f64) -> [f64; 3] {
    let incidence = r * y[0] * y[1];
    [-incidence, incidence - y[1], y[1]]
}

/// One piece of a piecewise-constant schedule: `r` holds from `start` until the
/// next segment begins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub r: f64,
}

/// Piecewise-constant reproduction number `R(tau)`; the last segment extends to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproductionSchedule {
    segments: Vec<Segment>,
}

impl ReproductionSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidSchedule("schedule has no segments".into()))?;
        if first.start != 0.0 {
            return Err(Error::InvalidSchedule(format!(
                "first segment starts at {} instead of 0",
                first.start
            )));
        }
        for seg in &segments {
            if !(seg.r > 0.0) || !seg.r.is_finite() {
                return Err(Error::InvalidSchedule(format!(
                    "reproduction number {} at tau = {} is not positive",
                    seg.r, seg.start
                )));
            }
            if !seg.start.is_finite() {
                return Err(Error::InvalidSchedule("segment start is not finite".into()));
            }
        }
        for pair in segments.windows(2) {
            if !(pair[1].start > pair[0].start) {
                return Err(Error::InvalidSchedule(format!(
                    "segment starts {} and {} are not strictly increasing",
                    pair[0].start, pair[1].start
                )));
            }
        }
        Ok(ReproductionSchedule { segments })
    }

    pub fn constant(r: f64) -> Result<Self> {
        ReproductionSchedule::new(vec![Segment { start: 0.0, r }])
    }

    /// Baseline `r0`, reduced to `r_s` on `[tau_s, tau_f]`, back to `r0` afterwards.
    pub fn single_interval(r0: f64, r_s: f64, tau_s: f64, tau_f: f64) -> Result<Self> {
        ReproductionSchedule::new(vec![
            Segment { start: 0.0, r: r0 },
            Segment { start: tau_s, r: r_s },
            Segment { start: tau_f, r: r0 },
        ])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Reproduction number in effect at `tau` (segments are closed on the left).
    pub fn r_at(&self, tau: f64) -> f64 {
        self.segments
            .iter()
            .rev()
            .find(|seg| seg.start <= tau)
            .unwrap_or(&self.segments[0])
            .r
    }
}

/// Physical transmission and recovery rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionalParams {
    pub beta: f64,
    pub gamma: f64,
}

impl DimensionalParams {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::validation("beta", format!("{beta} must be positive")));
        }
        if !(gamma > 0.0) {
            return Err(Error::validation("gamma", format!("{gamma} must be positive")));
        }
        Ok(DimensionalParams { beta, gamma })
    }
}

/// `(r, tau) = (beta / gamma, t * gamma)`.
pub fn nondimensionalize(p: &DimensionalParams, t: f64) -> (f64, f64) {
    (p.beta / p.gamma, t * p.gamma)
}

/// One emitted point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub tau: f64,
    pub state: EpiState,
    /// Reproduction number in effect on the step that produced the sample.
    pub r: f64,
}

/// A local maximum of the infected fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakEvent {
    pub tau: f64,
    pub i: f64,
    pub s: f64,
}

/// Detected events along a trajectory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEvents {
    /// Every local maximum of `i`, in time order.
    pub peaks: Vec<PeakEvent>,
    /// Times at which a decreasing `i` dropped below the QSS threshold.
    pub qss: Vec<f64>,
    /// Peaks that occurred after a QSS flag.
    pub second_waves: Vec<PeakEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: TrajectoryEvents,
}

impl Trajectory {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory is never empty")
    }

    /// Linear interpolation of the state at `tau` between emitted samples.
    pub fn state_at(&self, tau: f64) -> Option<EpiState> {
        let idx = self.samples.partition_point(|smp| smp.tau < tau);
        if idx == self.samples.len() {
            return None;
        }
        let hi = &self.samples[idx];
        if hi.tau == tau || idx == 0 {
            return (hi.tau == tau).then_some(hi.state);
        }
        let lo = &self.samples[idx - 1];
        let w = (tau - lo.tau) / (hi.tau - lo.tau);
        let mix = |a: f64, b: f64| a + w * (b - a);
        Some(EpiState {
            s: mix(lo.state.s, hi.state.s),
            i: mix(lo.state.i, hi.state.i),
            c: mix(lo.state.c, hi.state.c),
        })
    }

    /// Samples restricted to `[from, to]`.
    pub fn window(&self, from: f64, to: f64) -> impl Iterator<Item = &Sample> {
        self.samples
            .iter()
            .filter(move |smp| smp.tau >= from && smp.tau <= to)
    }
}

/// First local maximum of `i`, or `None` if `i` never rises.
///
/// Uses the peak events recorded by the integrator when present; otherwise
/// scans the samples and refines the maximum by a parabola through the three
/// bracketing samples.
pub fn peak_of_infected(traj: &Trajectory) -> Option<(f64, f64)> {
    if let Some(p) = traj.events.peaks.first() {
        return Some((p.tau, p.i));
    }
    let smp = &traj.samples;
    for k in 1..smp.len().saturating_sub(1) {
        let (a, b, c) = (&smp[k - 1], &smp[k], &smp[k + 1]);
        if b.state.i > a.state.i && b.state.i >= c.state.i {
            return Some(parabola_vertex(
                (a.tau, a.state.i),
                (b.tau, b.state.i),
                (c.tau, c.state.i),
            ));
        }
    }
    None
}

fn parabola_vertex(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> (f64, f64) {
    let (x0, y0) = p0;
    let (x1, y1) = p1;
    let (x2, y2) = p2;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if a >= 0.0 {
        return p1;
    }
    let b = d01 - a * (x0 + x1);
    let x = (-b / (2.0 * a)).clamp(x0, x2);
    let y = y0 + d01 * (x - x0) + a * (x - x0) * (x - x1);
    (x, y)
}

/// Time to quasi steady state under constant `r` starting from `x0`.
///
/// `multiplier * tau_hat` when the infected fraction peaks; otherwise the first
/// time `i` drops below `opts.i_qss_threshold`. Times are measured from `x0`.
pub fn qss_time(r: f64, x0: &EpiState, multiplier: f64, opts: &IntegrationOptions) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveR(r));
    }
    if x0.i == 0.0 {
        return Ok(0.0);
    }
    let schedule = ReproductionSchedule::constant(r)?;
    let traj = integrate(x0, &schedule, opts.horizon_cap, opts)?;
    if r * x0.s > 1.0 {
        if let Some((tau_hat, _)) = peak_of_infected(&traj) {
            return Ok(multiplier * tau_hat);
        }
    }
    traj.events
        .qss
        .first()
        .copied()
        .ok_or(Error::NoQss { horizon: opts.horizon_cap })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_examples() {
        let eq = EpiState::new(0.4, 0.0, 0.6).unwrap();
        assert_eq!(derivatives(&eq, 2.5), (-0.0, 0.0, 0.0));

        let (ds, di, dc) = derivatives(&EpiState::new(0.5, 0.1, 0.4).unwrap(), 2.0);
        assert!((ds + 0.1).abs() < 1e-15 && di.abs() < 1e-15 && (dc - 0.1).abs() < 1e-15);

        let (ds, di, dc) = derivatives(&EpiState::new(0.995, 0.005, 0.0).unwrap(), 2.5);
        // -2.5 * 0.995 * 0.005 = -0.0124375
        assert!((ds + 0.012_437_5).abs() < 1e-5);
        assert!((di - 0.007_437_5).abs() < 1e-5);
        assert!((dc - 0.005).abs() < 1e-15);
        assert_eq!(ds + di + dc, 0.0);
    }

    #[test]
    fn state_validation() {
        assert!(EpiState::new(0.5, 0.5, 0.1).is_err());
        assert!(EpiState::new(-0.1, 0.6, 0.5).is_err());
        assert!(EpiState::new(1.0 - 1e-10, 0.0, 0.0).is_ok());
        assert!(EpiState::outbreak(0.0).is_err());
        let x0 = EpiState::outbreak(0.005).unwrap();
        assert_eq!((x0.s, x0.i, x0.c), (0.995, 0.005, 0.0));
    }

    #[test]
    fn schedule_validation() {
        assert!(ReproductionSchedule::new(vec![]).is_err());
        assert!(ReproductionSchedule::new(vec![Segment { start: 1.0, r: 2.0 }]).is_err());
        assert!(ReproductionSchedule::constant(0.0).is_err());
        assert!(ReproductionSchedule::single_interval(2.5, 1.0, 3.0, 3.0).is_err());
        let sch = ReproductionSchedule::single_interval(2.5, 1.2, 2.0, 8.0).unwrap();
        assert_eq!(sch.r_at(0.0), 2.5);
        assert_eq!(sch.r_at(2.0), 1.2);
        assert_eq!(sch.r_at(7.9), 1.2);
        assert_eq!(sch.r_at(8.0), 2.5);
        assert_eq!(sch.r_at(1e9), 2.5);
    }

    #[test]
    fn nondimensionalize_examples() {
        let (r, tau) = nondimensionalize(&DimensionalParams::new(0.5, 0.2).unwrap(), 10.0);
        assert!((r - 2.5).abs() < 1e-15 && (tau - 2.0).abs() < 1e-15);
        assert_eq!(nondimensionalize(&DimensionalParams::new(0.2, 0.2).unwrap(), 0.0), (1.0, 0.0));
        let (r, tau) = nondimensionalize(&DimensionalParams::new(0.35, 0.1).unwrap(), 30.0);
        assert!((r - 3.5).abs() < 1e-12 && (tau - 3.0).abs() < 1e-12);
        assert!(DimensionalParams::new(0.0, 0.1).is_err());
        assert!(DimensionalParams::new(0.3, -1.0).is_err());
    }

    #[test]
    fn parabola_refines_between_samples() {
        let f = |x: f64| 1.0 - (x - 0.3).powi(2);
        let (x, y) = parabola_vertex((0.0, f(0.0)), (0.5, f(0.5)), (1.0, f(1.0)));
        assert!((x - 0.3).abs() < 1e-12 && (y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn peak_from_samples_without_events() {
        let samples = (0..=20)
            .map(|k| {
                let tau = k as f64 * 0.5;
                let i = 0.1 * (-(tau - 4.2f64).powi(2) / 4.0).exp();
                Sample {
                    tau,
                    state: EpiState { s: 0.5, i, c: 0.5 - i },
                    r: 1.0,
                }
            })
            .collect();
        let traj = Trajectory { samples, events: TrajectoryEvents::default() };
        let (tau, _) = peak_of_infected(&traj).unwrap();
        assert!((tau - 4.2).abs() < 0.05);
    }

    #[test]
    fn qss_time_of_equilibrium_is_zero() {
        let x0 = EpiState::equilibrium(0.9).unwrap();
        assert_eq!(qss_time(2.5, &x0, 5.0, &IntegrationOptions::default()).unwrap(), 0.0);
        assert!(qss_time(-1.0, &x0, 5.0, &IntegrationOptions::default()).is_err());
    }
}
