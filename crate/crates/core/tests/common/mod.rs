#![allow(dead_code)]

use sirgold::sir_dynamics::{integrate_until, EpiState, IntegrationOptions, ReproductionSchedule};

/// Plain bisection of `w e^w = z` on the principal branch.
pub fn bisect_w0(z: f64) -> f64 {
    let (mut lo, mut hi) = if z < 0.0 { (-1.0, 0.0) } else { (0.0, z.max(1.0)) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * mid.exp() < z {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Root of `s = s0 exp(-r (s0 + i0 - s))` in `(0, min(s0, 1/r)]`, by bisection.
pub fn bisect_s_infinity(r: f64, s0: f64, i0: f64) -> f64 {
    let f = |s: f64| s - s0 * (-r * (s0 + i0 - s)).exp();
    let mut hi = s0.min(1.0 / r);
    if f(hi) <= 0.0 {
        return hi;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Constant-`r` integration continued until `i` has died out.
pub fn settled(r: f64, x0: &EpiState, opts: &IntegrationOptions) -> sirgold::sir_dynamics::Trajectory {
    let schedule = ReproductionSchedule::constant(r).unwrap();
    integrate_until(x0, &schedule, 1e7, opts, |tau, x| tau > 1.0 && x.i < 1e-12 && r * x.s <= 1.0).unwrap()
}

pub fn outbreak() -> EpiState {
    EpiState::outbreak(0.005).unwrap()
}
