//! Closed-form final size of the SIR epidemic.
//!
//! For a start state `(s0, i0)` under constant `r` the susceptible fraction
//! converges to
//!
//! ```text
//! S_inf = -W0(-r s0 exp(-r (s0 + i0))) / r
//! ```
//!
//! which is the root in `[0, S*]` of `s0 exp(-r (s0 + i0)) = S_inf exp(-r S_inf)`.
//! The `(s0, i0)` form is used throughout; the shortcut that assumes `c0 = 0`
//! is wrong for restarts in the middle of an epidemic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambert_w::{w0, BRANCH_POINT};

/// Slack on `s0 + i0 <= 1`.
const QUERY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalSizeQuery {
    pub r: f64,
    pub s0: f64,
    pub i0: f64,
}

impl FinalSizeQuery {
    pub fn new(r: f64, s0: f64, i0: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::NonPositiveR(r));
        }
        for (field, v) in [("s0", s0), ("i0", i0)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(field, format!("{v} is outside [0, 1]")));
            }
        }
        if s0 + i0 > 1.0 + QUERY_TOL {
            return Err(Error::validation("s0", format!("s0 + i0 = {} exceeds 1", s0 + i0)));
        }
        Ok(FinalSizeQuery { r, s0, i0 })
    }
}

/// Herd immunity threshold `S* = min(1, 1/r)`.
pub fn herd_immunity_threshold(r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveR(r));
    }
    Ok((1.0 / r).min(1.0))
}

/// Lambert argument `-r s exp(-r (s + i))`, clamped onto the branch point
/// when rounding pushes it just below.
fn lambert_argument(r: f64, s: f64, i: f64) -> f64 {
    (-r * s * (-r * (s + i)).exp()).max(BRANCH_POINT)
}

/// Final susceptible fraction `S_inf(r, s0, i0)`.
///
/// With `i0 = 0` and `s0 > S*` this is the post-outbreak root, not `s0`: the
/// state is an equilibrium but an unstable one.
pub fn final_size(q: &FinalSizeQuery) -> f64 {
    if q.s0 == 0.0 {
        return 0.0;
    }
    let w = w0(lambert_argument(q.r, q.s0, q.i0))
        .expect("argument of a valid query lies in the Lambert W domain");
    (-w / q.r).max(0.0)
}

/// Convenience wrapper that validates the arguments.
pub fn s_infinity(r: f64, s0: f64, i0: f64) -> Result<f64> {
    Ok(final_size(&FinalSizeQuery::new(r, s0, i0)?))
}

/// Residual of the transcendental final-size relation.
pub fn final_size_residual(q: &FinalSizeQuery, s_inf: f64) -> f64 {
    q.s0 * (-q.r * (q.s0 + q.i0)).exp() - s_inf * (-q.r * s_inf).exp()
}

/// Maximiser of `S_inf(r, s, i)` over `{s in [0, 1], i in [delta, 1]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalSizeOptimum {
    pub s_op: f64,
    pub i_op: f64,
    pub s_inf_op: f64,
}

/// The constrained maximum sits at `(S*, delta)` with value
/// `-W0(-r S* exp(-r (S* + delta))) / r`; at `delta = 0` the value is `S*`.
pub fn final_size_optimum(r: f64, delta: f64) -> Result<FinalSizeOptimum> {
    let s_star = herd_immunity_threshold(r)?;
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::validation("delta", format!("{delta} is outside [0, 1]")));
    }
    let s_inf_op = if delta == 0.0 {
        s_star
    } else {
        let w = w0(lambert_argument(r, s_star, delta))?;
        -w / r
    };
    Ok(FinalSizeOptimum {
        s_op: s_star,
        i_op: delta,
        s_inf_op,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        assert_eq!(herd_immunity_threshold(2.5).unwrap(), 0.4);
        assert_eq!(herd_immunity_threshold(0.5).unwrap(), 1.0);
        assert_eq!(herd_immunity_threshold(1.0).unwrap(), 1.0);
        assert!(matches!(herd_immunity_threshold(0.0), Err(Error::NonPositiveR(_))));
        assert!(matches!(herd_immunity_threshold(-2.0), Err(Error::NonPositiveR(_))));
    }

    #[test]
    fn fixed_point_below_threshold() {
        assert!((s_infinity(2.5, 0.4, 0.0).unwrap() - 0.4).abs() < 1e-7);
        assert!((s_infinity(2.5, 0.3, 0.0).unwrap() - 0.3).abs() < 1e-14);
        assert!((s_infinity(0.8, 0.7, 0.0).unwrap() - 0.7).abs() < 1e-14);
    }

    #[test]
    fn degenerate_queries() {
        assert_eq!(s_infinity(2.5, 0.0, 0.3).unwrap(), 0.0);
        // unstable equilibrium: the formula returns the nontrivial root
        let post = s_infinity(2.5, 0.9, 0.0).unwrap();
        assert!(post < 0.4 && post > 0.0);
        let q = FinalSizeQuery::new(2.5, 0.9, 0.0).unwrap();
        assert!(final_size_residual(&q, post).abs() < 1e-12);
    }

    #[test]
    fn query_validation() {
        assert!(FinalSizeQuery::new(0.0, 0.5, 0.1).is_err());
        assert!(FinalSizeQuery::new(2.5, 0.8, 0.3).is_err());
        assert!(FinalSizeQuery::new(2.5, 1.2, 0.0).is_err());
        assert!(FinalSizeQuery::new(2.5, 0.9, 0.1 + 5e-10).is_ok());
    }

    #[test]
    fn optimum_examples() {
        let op = final_size_optimum(2.5, 0.0).unwrap();
        assert_eq!((op.s_op, op.i_op, op.s_inf_op), (0.4, 0.0, 0.4));
        let op = final_size_optimum(0.8, 0.0).unwrap();
        assert_eq!((op.s_op, op.i_op, op.s_inf_op), (1.0, 0.0, 1.0));
        let op = final_size_optimum(2.5, 0.05).unwrap();
        assert_eq!((op.s_op, op.i_op), (0.4, 0.05));
        assert!(op.s_inf_op < 0.4);
        assert!((op.s_inf_op - s_infinity(2.5, 0.4, 0.05).unwrap()).abs() < 1e-15);
        assert!(final_size_optimum(-1.0, 0.0).is_err());
        assert!(final_size_optimum(2.5, 1.5).is_err());
    }

    #[test]
    fn optimum_near_zero_delta_is_continuous() {
        let a = final_size_optimum(2.5, 1e-12).unwrap().s_inf_op;
        assert!((a - 0.4).abs() < 1e-5);
    }
}
