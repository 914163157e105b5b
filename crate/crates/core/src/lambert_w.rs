//! Principal branch of the Lambert W function.
//!
//! `w0(z)` solves `w e^w = z` with `w >= -1` for real `z >= -1/e`. The
//! iteration is Halley's method, seeded by the branch-point series in
//! `p = sqrt(2 (e z + 1))` near `z = -1/e`, by `ln(1 + z)` in the middle of
//! the range and by the two-term logarithmic asymptotic for large `z`.

use crate::error::{Error, Result};

/// High part of `1/e` as an `f64`.
const INV_E_HI: f64 = 0.367_879_441_171_442_33;
/// `1/e - INV_E_HI`, so that `z + 1/e` can be formed without cancellation.
const INV_E_LO: f64 = -1.242_875_367_278_836_3e-17;

/// The branch point `-1/e`.
pub const BRANCH_POINT: f64 = -INV_E_HI;

/// Arguments within this distance below `-1/e` are clamped onto the branch point.
pub const DOMAIN_TOL: f64 = 1e-12;

const MAX_ITER: usize = 50;
const STEP_TOL: f64 = 1e-14;
const RESIDUAL_TOL: f64 = 1e-12;

/// Argument of the principal Lambert W branch, validated against the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WDomainPoint(f64);

impl WDomainPoint {
    /// Accepts `z >= -1/e - DOMAIN_TOL`; values inside the tolerance band are
    /// clamped to `-1/e`.
    pub fn new(z: f64) -> Result<Self> {
        if z.is_nan() || z < BRANCH_POINT - DOMAIN_TOL {
            return Err(Error::Domain { z });
        }
        Ok(WDomainPoint(z.max(BRANCH_POINT)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Principal branch `W0(z)`.
pub fn w0(z: f64) -> Result<f64> {
    let z = WDomainPoint::new(z)?.value();
    if z == BRANCH_POINT {
        return Ok(-1.0);
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(f64::INFINITY);
    }

    // distance to the branch point, computed with the split constant
    let dist = (z + INV_E_HI) + INV_E_LO;
    if dist <= 0.0 {
        return Ok(-1.0);
    }

    let mut w = initial_guess(z, dist);
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        if f == 0.0 || wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        if !step.is_finite() {
            break;
        }
        w -= step;
        if w < -1.0 {
            w = -1.0;
        }
        if step.abs() <= STEP_TOL * w.abs().max(STEP_TOL) {
            break;
        }
    }

    let residual = (w * w.exp() - z).abs();
    if residual > RESIDUAL_TOL * z.abs().max(1.0) || !w.is_finite() {
        return Err(Error::NoConvergence { z, residual });
    }
    Ok(w)
}

fn initial_guess(z: f64, dist: f64) -> f64 {
    if dist < 0.25 {
        let p = (2.0 * std::f64::consts::E * dist).sqrt();
        // W0 = -1 + p - p^2/3 + 11/72 p^3 - 43/540 p^4 + ...
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))))
    } else if z < 3.0 {
        z.ln_1p() * 0.8
    } else {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}
