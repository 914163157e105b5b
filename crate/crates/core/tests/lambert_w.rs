mod common;

use common::bisect_w0;
use proptest::prelude::*;
use sirgold::lambert_w::{w0, BRANCH_POINT};

proptest! {
    #[test]
    fn round_trip(z in BRANCH_POINT..10.0f64) {
        let w = w0(z).unwrap();
        prop_assert!((w * w.exp() - z).abs() <= 1e-12 * z.abs().max(1.0));
        prop_assert!(w >= -1.0);
    }

    #[test]
    fn increasing(a in BRANCH_POINT..50.0f64, b in BRANCH_POINT..50.0f64) {
        prop_assume!(a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(w0(lo).unwrap() < w0(hi).unwrap());
    }

    #[test]
    fn agrees_with_bisection(z in BRANCH_POINT..10.0f64) {
        prop_assert!((w0(z).unwrap() - bisect_w0(z)).abs() <= 1e-10);
    }
}

#[test]
fn known_values() {
    assert_eq!(w0(BRANCH_POINT).unwrap(), -1.0);
    assert_eq!(w0(0.0).unwrap(), 0.0);
    let ln2 = std::f64::consts::LN_2;
    assert!((w0(2.0 * ln2).unwrap() - ln2).abs() < 1e-15);
    assert!((w0(-0.5 * ln2).unwrap() + ln2).abs() < 1e-15);
}
