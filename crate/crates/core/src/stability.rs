//! Equilibrium classification, Lyapunov functions and level-set/phase-portrait
//! data.
//!
//! The disease-free equilibria `(s_bar, 0, 1 - s_bar)` split into a stable part
//! `s_bar <= S*` and an unstable part `s_bar > S*`. Along any constant-`r`
//! trajectory `S_inf(r, s, i)` is conserved, so the level sets of
//! `V(s, i) = S* - S_inf(r, s, i)` are invariant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::final_size::{herd_immunity_threshold, s_infinity};
use crate::sir_dynamics::{integrate, EpiState, IntegrationOptions, ReproductionSchedule, Trajectory};

/// Residual tolerance for points on a level curve.
pub const CURVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub s_bar: f64,
}

impl EquilibriumPoint {
    pub fn new(s_bar: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s_bar) {
            return Err(Error::InvalidState(format!("s_bar = {s_bar} is outside [0, 1]")));
        }
        Ok(EquilibriumPoint { s_bar })
    }

    pub fn state(&self) -> EpiState {
        EpiState {
            s: self.s_bar,
            i: 0.0,
            c: 1.0 - self.s_bar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumClass {
    Stable,
    Unstable,
}

pub fn equilibrium_class(p: &EquilibriumPoint, r: f64) -> Result<EquilibriumClass> {
    let s_star = herd_immunity_threshold(r)?;
    Ok(if p.s_bar <= s_star {
        EquilibriumClass::Stable
    } else {
        EquilibriumClass::Unstable
    })
}

/// `V = s - s_bar - s_bar ln(s / s_bar) + i`.
pub fn lyapunov_v(state: &EpiState, s_bar: f64) -> Result<f64> {
    if state.s <= 0.0 {
        return Err(Error::InvalidState("lyapunov_v is singular at s = 0".into()));
    }
    if !(s_bar > 0.0 && s_bar <= 1.0) {
        return Err(Error::InvalidState(format!("s_bar = {s_bar} is outside (0, 1]")));
    }
    Ok(state.s - s_bar - s_bar * (state.s / s_bar).ln() + state.i)
}

/// Time derivative of `V` along the flow: `i (r s_bar - 1)`.
pub fn lyapunov_vdot(state: &EpiState, s_bar: f64, r: f64) -> f64 {
    state.i * (r * s_bar - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    pub r: f64,
    pub level: f64,
    /// `(s, i)` pairs.
    pub points: Vec<(f64, f64)>,
}

/// Points of `{(s, i) : S_inf(r, s, i) = S* - level}` inside the simplex.
///
/// `s` runs over an even grid of the feasible range; for each `s` the matching
/// `i` in `[0, 1 - s]` is found by bisection (`S_inf` decreases in `i`).
pub fn final_size_level_set(r: f64, level: f64, n: usize) -> Result<LevelCurve> {
    let s_star = herd_immunity_threshold(r)?;
    if n < 2 {
        return Err(Error::validation("n", format!("{n} points requested, need at least 2")));
    }
    if !(level >= 0.0) || level >= s_star {
        return Err(Error::EmptyCurve { level });
    }
    if level == 0.0 {
        return Ok(LevelCurve { r, level, points: vec![(s_star, 0.0)] });
    }
    let target = s_star - level;
    let at_i0 = |s: f64| s_infinity(r, s, 0.0);

    // left end: S_inf(r, s, 0) = s below S*
    let s_lo = target;
    // right end: the s > S* whose post-outbreak root equals the target
    let s_hi = if at_i0(1.0)? >= target {
        1.0
    } else {
        let (mut lo, mut hi) = (s_star, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at_i0(mid)? >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };

    let mut points = Vec::with_capacity(n);
    for k in 0..n {
        let s = s_lo + (s_hi - s_lo) * k as f64 / (n - 1) as f64;
        if let Some(i) = solve_i(r, s, target)? {
            points.push((s, i));
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyCurve { level });
    }
    Ok(LevelCurve { r, level, points })
}

fn solve_i(r: f64, s: f64, target: f64) -> Result<Option<f64>> {
    let h = |i: f64| s_infinity(r, s, i).map(|v| v - target);
    let i_max = (1.0 - s).max(0.0);
    let h0 = h(0.0)?;
    if h0.abs() <= CURVE_TOL {
        return Ok(Some(0.0));
    }
    if h0 < 0.0 || h(i_max)? > 0.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, i_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let i = 0.5 * (lo + hi);
    Ok((h(i)?.abs() <= CURVE_TOL).then_some(i))
}

/// Twelve starts evenly spaced on the `c = 0` edge, `s = k/13`.
pub fn default_starts() -> Vec<EpiState> {
    (1..=12)
        .map(|k| {
            let s = k as f64 / 13.0;
            EpiState { s, i: 1.0 - s, c: 0.0 }
        })
        .collect()
}

/// One trajectory per start under the same schedule.
pub fn phase_portrait(
    schedule: &ReproductionSchedule,
    starts: &[EpiState],
    tau_end: f64,
    opts: &IntegrationOptions,
) -> Result<Vec<Trajectory>> {
    starts
        .iter()
        .map(|x0| integrate(x0, schedule, tau_end, opts))
        .collect()
}

/// Largest deviation of `S_inf(r, s_k, i_k)` from its value at the first sample.
pub fn sinfinity_invariance_check(traj: &Trajectory, r: f64) -> Result<f64> {
    let first = traj.first().state;
    let reference = s_infinity(r, first.s, first.i.min(1.0 - first.s))?;
    let mut drift: f64 = 0.0;
    for smp in &traj.samples {
        let st = smp.state;
        let v = s_infinity(r, st.s, st.i.min(1.0 - st.s))?;
        drift = drift.max((v - reference).abs());
    }
    Ok(drift)
}

/// [`sinfinity_invariance_check`] applied to each constant-`r` piece of a
/// trajectory; returns one drift per segment.
pub fn segmentwise_invariance(traj: &Trajectory, schedule: &ReproductionSchedule) -> Result<Vec<f64>> {
    let segs = schedule.segments();
    let mut drifts = Vec::with_capacity(segs.len());
    for (idx, seg) in segs.iter().enumerate() {
        let end = segs.get(idx + 1).map_or(f64::INFINITY, |n| n.start);
        let piece: Vec<_> = traj.window(seg.start, end).copied().collect();
        if piece.is_empty() {
            continue;
        }
        let sub = Trajectory { samples: piece, events: Default::default() };
        drifts.push(sinfinity_invariance_check(&sub, seg.r)?);
    }
    Ok(drifts)
}
