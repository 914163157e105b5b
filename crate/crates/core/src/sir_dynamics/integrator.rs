//! Adaptive Dormand-Prince 5(4) integration of the SIR flow.
//!
//! Each constant-`r` segment of the schedule is integrated separately, so no
//! step ever straddles a jump of `R(tau)`. Dense output between accepted steps
//! is the cubic Hermite interpolant built from the FSAL end-point slopes.

use serde::{Deserialize, Serialize};

use super::{rhs, EpiState, PeakEvent, ReproductionSchedule, Sample, Trajectory, TrajectoryEvents};
use crate::error::{Error, Result};

/// Default threshold on `i` below which a decreasing epidemic counts as being
/// in quasi steady state.
pub const DEFAULT_I_QSS_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step; keeps the decaying `i` mode inside the
    /// stability region when `i` is far below `abs_tol`.
    pub max_step: f64,
    pub min_step: f64,
    pub initial_step: f64,
    pub max_steps: usize,
    /// Extra uniformly spaced samples taken from the dense output.
    pub output_step: Option<f64>,
    pub i_qss_threshold: f64,
    /// Horizon used when a routine must integrate "until QSS".
    pub horizon_cap: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 1.0,
            min_step: 1e-12,
            initial_step: 1e-3,
            max_steps: 2_000_000,
            output_step: None,
            i_qss_threshold: DEFAULT_I_QSS_THRESHOLD,
            horizon_cap: 2_000.0,
        }
    }
}

impl IntegrationOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("min_step", self.min_step),
            ("initial_step", self.initial_step),
            ("i_qss_threshold", self.i_qss_threshold),
            ("horizon_cap", self.horizon_cap),
        ];
        for (field, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(field, format!("{v} must be positive and finite")));
            }
        }
        if self.min_step > self.max_step {
            return Err(Error::validation("min_step", "exceeds max_step"));
        }
        if let Some(dt) = self.output_step {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::validation("output_step", format!("{dt} must be positive")));
            }
        }
        Ok(())
    }
}

// The flow is autonomous, so the node coefficients c_i never enter a stage.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type Vec3 = [f64; 3];

#[inline]
fn axpy(y: Vec3, h: f64, terms: &[(f64, &Vec3)]) -> Vec3 {
    let mut out = y;
    for (coef, k) in terms {
        for j in 0..3 {
            out[j] += h * coef * k[j];
        }
    }
    out
}

struct StepResult {
    y: Vec3,
    k7: Vec3,
    err: f64,
}

fn dp5_step(y: Vec3, k1: &Vec3, h: f64, r: f64, opts: &IntegrationOptions) -> StepResult {
    let k2 = rhs(axpy(y, h, &[(A21, k1)]), r);
    let k3 = rhs(axpy(y, h, &[(A31, k1), (A32, &k2)]), r);
    let k4 = rhs(axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]), r);
    let k5 = rhs(axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]), r);
    let k6 = rhs(
        axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        r,
    );
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = rhs(y_new, r);

    let mut sum = 0.0;
    for j in 0..3 {
        let e = h
            * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j] + E6 * k6[j] + E7 * k7[j]);
        let sc = opts.abs_tol + opts.rel_tol * y[j].abs().max(y_new[j].abs());
        sum += (e / sc).powi(2);
    }
    StepResult {
        y: y_new,
        k7,
        err: (sum / 3.0).sqrt(),
    }
}

/// Cubic Hermite interpolant over one accepted step.
struct Hermite {
    t0: f64,
    h: f64,
    y0: Vec3,
    y1: Vec3,
    f0: Vec3,
    f1: Vec3,
}

impl Hermite {
    fn eval(&self, tau: f64) -> Vec3 {
        let th = ((tau - self.t0) / self.h).clamp(0.0, 1.0);
        let th2 = th * th;
        let th3 = th2 * th;
        let h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
        let h10 = th3 - 2.0 * th2 + th;
        let h01 = -2.0 * th3 + 3.0 * th2;
        let h11 = th3 - th2;
        std::array::from_fn(|j| {
            h00 * self.y0[j] + h10 * self.h * self.f0[j] + h01 * self.y1[j] + h11 * self.h * self.f1[j]
        })
    }

    /// Bisection for a sign change of `g` on the step, to 1e-10 in tau.
    fn bisect(&self, g: impl Fn(Vec3) -> f64) -> f64 {
        let (mut lo, mut hi) = (self.t0, self.t0 + self.h);
        let g_lo = g(self.eval(lo));
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if (g(self.eval(mid)) > 0.0) == (g_lo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

struct EventTracker {
    threshold: f64,
    armed: bool,
    events: TrajectoryEvents,
}

impl EventTracker {
    fn new(threshold: f64, y0: Vec3, r0: f64) -> Self {
        let mut tracker = EventTracker {
            threshold,
            armed: false,
            events: TrajectoryEvents::default(),
        };
        if y0[1] < threshold && (y0[1] == 0.0 || r0 * y0[0] <= 1.0) {
            tracker.flag_qss(0.0);
        }
        tracker
    }

    fn flag_qss(&mut self, tau: f64) {
        self.events.qss.push(tau);
        self.armed = true;
    }

    fn peak(&mut self, ev: PeakEvent) {
        self.events.peaks.push(ev);
        if self.armed {
            self.events.second_waves.push(ev);
            self.armed = false;
        }
    }

    /// Kink maximum of `i` where `r` jumps down across the growth threshold.
    fn at_breakpoint(&mut self, tau: f64, y: Vec3, r_prev: f64, r_next: f64) {
        if y[1] > 0.0 && r_prev * y[0] - 1.0 > 0.0 && r_next * y[0] - 1.0 <= 0.0 {
            self.peak(PeakEvent { tau, i: y[1], s: y[0] });
        }
    }

    fn on_step(&mut self, dense: &Hermite, r: f64) {
        let (y0, y1) = (dense.y0, dense.y1);
        let g0 = r * y0[0] - 1.0;
        let g1 = r * y1[0] - 1.0;
        if y0[1] > 0.0 && g0 > 0.0 && g1 <= 0.0 {
            let tau = dense.bisect(|y| r * y[0] - 1.0);
            let y = dense.eval(tau);
            self.peak(PeakEvent { tau, i: y[1], s: y[0] });
        }
        if !self.armed && y1[1] < self.threshold && g1 <= 0.0 {
            let thr = self.threshold;
            let tau = if y0[1] >= thr {
                dense.bisect(|y| y[1] - thr)
            } else {
                dense.t0
            };
            self.flag_qss(tau);
        }
    }
}

/// Integrates from `x0` at `tau = 0` to `tau_end` under `schedule`.
pub fn integrate(
    x0: &EpiState,
    schedule: &ReproductionSchedule,
    tau_end: f64,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    integrate_until(x0, schedule, tau_end, opts, |_, _| false)
}

/// Like [`integrate`], but stops early after the first accepted step for which
/// `stop(tau, state)` holds.
pub fn integrate_until(
    x0: &EpiState,
    schedule: &ReproductionSchedule,
    tau_end: f64,
    opts: &IntegrationOptions,
    mut stop: impl FnMut(f64, &EpiState) -> bool,
) -> Result<Trajectory> {
    if !(tau_end > 0.0) || !tau_end.is_finite() {
        return Err(Error::InvalidHorizon(tau_end));
    }
    opts.validate()?;

    let segments = schedule.segments();
    let mut y = x0.to_array();
    let mut t = 0.0;
    let mut h = opts.initial_step.min(opts.max_step);
    let mut steps = 0usize;
    let mut next_output = opts.output_step;

    let mut samples = vec![Sample { tau: 0.0, state: *x0, r: segments[0].r }];
    let mut tracker = EventTracker::new(opts.i_qss_threshold, y, segments[0].r);

    'segments: for (idx, seg) in segments.iter().enumerate() {
        if seg.start >= tau_end {
            break;
        }
        let seg_end = segments
            .get(idx + 1)
            .map_or(tau_end, |next| next.start.min(tau_end));
        let r = seg.r;
        if idx > 0 {
            tracker.at_breakpoint(t, y, segments[idx - 1].r, r);
        }
        let mut k1 = rhs(y, r);

        while t < seg_end {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::StepFailure { tau: t, step: h });
            }
            let remaining = seg_end - t;
            let mut last = false;
            let mut h_try = h.min(opts.max_step);
            if h_try >= remaining * (1.0 - 1e-12) {
                h_try = remaining;
                last = true;
            }

            let step = dp5_step(y, &k1, h_try, r, opts);
            let accept = step.err <= 1.0 && step.y.iter().all(|v| v.is_finite());
            let factor = if step.err == 0.0 {
                5.0
            } else {
                (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0)
            };

            if !accept {
                h = h_try * factor.min(1.0);
                if h < opts.min_step {
                    return Err(Error::StepFailure { tau: t, step: h });
                }
                continue;
            }

            let t_new = if last { seg_end } else { t + h_try };
            let dense = Hermite {
                t0: t,
                h: t_new - t,
                y0: y,
                y1: step.y,
                f0: k1,
                f1: step.k7,
            };
            tracker.on_step(&dense, r);

            if let Some(dt) = opts.output_step {
                while let Some(tau_out) = next_output {
                    if tau_out >= t_new {
                        break;
                    }
                    if tau_out > t {
                        samples.push(Sample {
                            tau: tau_out,
                            state: EpiState::from_array_clamped(dense.eval(tau_out)),
                            r,
                        });
                    }
                    next_output = Some(tau_out + dt);
                }
            }

            let state = EpiState::from_array_clamped(step.y);
            samples.push(Sample { tau: t_new, state, r });
            y = step.y;
            k1 = step.k7;
            t = t_new;
            if !last {
                h = h_try * factor;
            }
            if stop(t, &state) {
                break 'segments;
            }
        }
    }

    Ok(Trajectory {
        samples,
        events: tracker.events,
    })
}
