mod common;

use proptest::prelude::*;
use sirgold::final_size::{herd_immunity_threshold, s_infinity};
use sirgold::sir_dynamics::{integrate, EpiState, IntegrationOptions, ReproductionSchedule};
use sirgold::stability::{
    default_starts, equilibrium_class, final_size_level_set, lyapunov_v, lyapunov_vdot,
    phase_portrait, segmentwise_invariance, sinfinity_invariance_check, EquilibriumClass,
    EquilibriumPoint,
};

proptest! {
    #[test]
    fn vdot_sign_follows_threshold(
        s in 0.01..1.0f64,
        frac in 0.001..1.0f64,
        s_bar in 0.01..1.0f64,
        r in 0.2..6.0f64,
    ) {
        let i = frac * (1.0 - s);
        prop_assume!(i > 0.0);
        let st = EpiState { s, i, c: 1.0 - s - i };
        let vdot = lyapunov_vdot(&st, s_bar, r);
        let expected = (r * s_bar - 1.0).signum();
        if r * s_bar == 1.0 {
            prop_assert_eq!(vdot, 0.0);
        } else {
            prop_assert_eq!(vdot.signum(), expected);
        }
        let class = equilibrium_class(&EquilibriumPoint::new(s_bar).unwrap(), r).unwrap();
        prop_assert_eq!(class == EquilibriumClass::Stable, s_bar <= herd_immunity_threshold(r).unwrap());
    }
}

#[test]
fn lyapunov_decreases_for_stable_equilibria() {
    let r = 2.5;
    let sch = ReproductionSchedule::constant(r).unwrap();
    let trajs = phase_portrait(&sch, &default_starts(), 40.0, &IntegrationOptions::default()).unwrap();
    for s_bar in [0.1, 0.25, 0.4] {
        for traj in &trajs {
            let v: Vec<f64> = traj.samples.iter().map(|smp| lyapunov_v(&smp.state, s_bar).unwrap()).collect();
            for w in v.windows(2) {
                // at s_bar = S* V is conserved, so only integration error can raise it
                assert!(w[1] <= w[0] + 1e-9, "s_bar = {s_bar}: {} -> {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn level_curves_are_invariant() {
    let r = 2.5;
    let sch = ReproductionSchedule::constant(r).unwrap();
    for level in [0.05, 0.1, 0.2] {
        let curve = final_size_level_set(r, level, 12).unwrap();
        for &(s, i) in &curve.points {
            if i == 0.0 {
                continue;
            }
            let x0 = EpiState::new(s, i, 1.0 - s - i).unwrap();
            let traj = integrate(&x0, &sch, 60.0, &IntegrationOptions::default()).unwrap();
            let drift = sinfinity_invariance_check(&traj, r).unwrap();
            assert!(drift <= 1e-6, "level {level} from ({s}, {i}): drift {drift}");
            let end = traj.last().state;
            assert!((s_infinity(r, end.s, end.i).unwrap() - (0.4 - level)).abs() <= 1e-6);
        }
    }
}

#[test]
fn piecewise_invariance_on_switched_runs() {
    let sch = ReproductionSchedule::single_interval(2.5, 1.2, 2.0, 15.0).unwrap();
    let traj = integrate(&common::outbreak(), &sch, 80.0, &IntegrationOptions::default()).unwrap();
    let drifts = segmentwise_invariance(&traj, &sch).unwrap();
    assert_eq!(drifts.len(), 3);
    assert!(drifts.iter().all(|&d| d <= 1e-6), "{drifts:?}");
}

#[test]
fn phase_portrait_ends_in_stable_set() {
    let sch = ReproductionSchedule::constant(2.5).unwrap();
    let trajs = phase_portrait(&sch, &default_starts(), 60.0, &IntegrationOptions::default()).unwrap();
    assert_eq!(trajs.len(), 12);
    for traj in trajs {
        assert!(traj.last().state.s <= 0.4 + 1e-3);
    }
}

#[test]
fn unstable_equilibria_are_left_behind() {
    let r = 2.5;
    for s_bar in [0.6, 0.8, 0.95] {
        let x0 = EpiState::new(s_bar, 1e-6, 1.0 - s_bar - 1e-6).unwrap();
        let end = common::settled(r, &x0, &IntegrationOptions::default()).last().state;
        assert!(end.s < 0.4, "s_bar = {s_bar} ends at {}", end.s);
        assert!(s_bar - end.s > 0.2);
    }
}
