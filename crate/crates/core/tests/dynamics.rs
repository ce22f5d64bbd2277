use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use topomode::dynamics::{self, IntegrationOptions, Sampling};
use topomode::{DimensionlessParams, Frame, ModeAmplitudes};

fn params(a: f64, b: f64, delta: f64) -> DimensionlessParams {
    DimensionlessParams::new(a, b, delta).unwrap()
}

fn sampled(frame: Frame, dt: f64) -> IntegrationOptions {
    IntegrationOptions {
        frame,
        sampling: Sampling::Interval(dt),
        ..IntegrationOptions::default()
    }
}

fn max_component_gap(x: &ModeAmplitudes, y: &ModeAmplitudes) -> f64 {
    (x.c0 - y.c0).norm().max((x.cp - y.cp).norm())
}

#[test]
fn weak_pump_stays_locked() {
    let traj = dynamics::integrate(&params(1.0, 0.4, 0.0), &ModeAmplitudes::ground(), 50.0, 1e-10).unwrap();
    assert!(traj.populations().min_n0() > 0.5);
}

#[test]
fn strong_pump_transfers_fully() {
    let traj = dynamics::integrate(&params(1.0, 0.6, 0.0), &ModeAmplitudes::ground(), 50.0, 1e-10).unwrap();
    assert!(traj.populations().max_np() > 0.99);
}

#[test]
fn boundary_pump_barely_empties_ground_mode() {
    let traj = dynamics::integrate(&params(1.0, 0.5, 0.0), &ModeAmplitudes::ground(), 100.0, 1e-10).unwrap();
    let pops = traj.populations();
    assert!(pops.min_n0() < 0.6, "min n0 = {}", pops.min_n0());
    assert!(pops.min_n0() > 0.4, "min n0 = {}", pops.min_n0());
}

#[test]
fn normalization_drift_over_long_horizon() {
    for (a, b, delta) in [
        (1.0, 0.4, 0.0),
        (1.0, 0.6, 0.0),
        (0.8, 0.57, 0.0),
        (0.1, 0.275, 0.45),
        (2.0, 1.5, -1.0),
    ] {
        let traj = dynamics::integrate(&params(a, b, delta), &ModeAmplitudes::ground(), 200.0, 1e-10).unwrap();
        let drift = traj.max_normalization_error();
        assert!(drift < 1e-7, "({a}, {b}, {delta}): drift {drift:e}");
    }
}

#[test]
fn populations_sum_to_one() {
    let traj = dynamics::integrate(&params(0.5, 0.7, 0.2), &ModeAmplitudes::ground(), 80.0, 1e-10).unwrap();
    let pops = dynamics::populations(&traj);
    for (n0, np) in pops.n0.iter().zip(&pops.np) {
        assert!((n0 + np - 1.0).abs() < 1e-8);
    }
}

#[test]
fn rotating_and_lab_frames_agree() {
    for (a, b, delta) in [(1.0, 0.45, 0.0), (0.1, 0.27, 0.45), (0.8, 0.6, -0.7), (1.5, 1.0, 1.3)] {
        let p = params(a, b, delta);
        let rot =
            dynamics::integrate_with(&p, &ModeAmplitudes::ground(), 60.0, &sampled(Frame::Rotating, 0.25)).unwrap();
        let lab = dynamics::integrate_with(&p, &ModeAmplitudes::ground(), 60.0, &sampled(Frame::Lab, 0.25)).unwrap();
        assert_eq!(rot.times, lab.times);
        let worst = rot
            .states
            .iter()
            .zip(&lab.states)
            .map(|(x, y)| max_component_gap(x, y))
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "({a}, {b}, {delta}): {worst:e}");
    }
}

#[test]
fn linear_limit_matches_rabi_formula() {
    let grid: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let mut worst: f64 = 0.0;
    for &b in &grid {
        for &delta in &grid {
            let opts = IntegrationOptions {
                linear: true,
                ..sampled(Frame::Rotating, 0.5)
            };
            let traj =
                dynamics::integrate_with(&params(1.0, b, delta), &ModeAmplitudes::ground(), 100.0, &opts).unwrap();
            for (t, s) in traj.times.iter().zip(&traj.states) {
                let reference = dynamics::rabi_reference(b, delta, *t).unwrap();
                worst = worst.max((s.np() - reference).abs());
            }
        }
    }
    assert!(worst < 1e-6, "worst deviation {worst:e}");
}

#[test]
fn rabi_peak_population() {
    let omega = 0.5;
    let np = dynamics::rabi_reference(0.3, 0.4, PI / omega).unwrap();
    assert!((np - 0.36).abs() < 1e-14);
}

#[test]
fn resonant_rabi_full_period_returns_to_ground() {
    let b = 0.37;
    assert!(dynamics::rabi_reference(b, 0.0, 2.0 * PI / b).unwrap() < 1e-28);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forward_then_backward_is_identity(
        a in 0.0..2.0f64,
        b in 0.0..2.0f64,
        delta in -2.0..2.0f64,
        theta in 0.0..(PI / 2.0),
        phase in 0.0..(2.0 * PI),
    ) {
        let p = params(a, b, delta);
        let init = ModeAmplitudes::new(
            Complex64::new(theta.cos(), 0.0),
            Complex64::from_polar(theta.sin(), phase),
        );
        let opts = IntegrationOptions::with_tol(1e-10);
        let there = dynamics::propagate(&p, &init, 0.0, 50.0, &opts).unwrap();
        let back = dynamics::propagate(&p, &there, 50.0, 0.0, &opts).unwrap();
        prop_assert!(max_component_gap(&back, &init) < 1e-6, "gap {:e}", max_component_gap(&back, &init));
    }

    #[test]
    fn global_phase_commutes_with_evolution(
        a in 0.0..2.0f64,
        b in 0.0..2.0f64,
        delta in -2.0..2.0f64,
        chi in 0.0..(2.0 * PI),
    ) {
        let p = params(a, b, delta);
        let opts = sampled(Frame::Rotating, 0.5);
        let plain = dynamics::integrate_with(&p, &ModeAmplitudes::ground(), 30.0, &opts).unwrap();
        let init = ModeAmplitudes::ground().with_global_phase(chi);
        let turned = dynamics::integrate_with(&p, &init, 30.0, &opts).unwrap();
        prop_assert_eq!(plain.times.len(), turned.times.len());
        let rot = Complex64::from_polar(1.0, chi);
        for (x, y) in plain.states.iter().zip(&turned.states) {
            prop_assert!((x.c0 * rot - y.c0).norm() < 1e-9);
            prop_assert!((x.cp * rot - y.cp).norm() < 1e-9);
            prop_assert!((x.n0() - y.n0()).abs() < 1e-12);
            prop_assert!((x.np() - y.np()).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_preserves_norm(
        a in 0.0..3.0f64,
        b in 0.0..3.0f64,
        delta in -3.0..3.0f64,
        theta in 0.0..(PI / 2.0),
        phase in 0.0..(2.0 * PI),
        t in 0.0..100.0f64,
    ) {
        let s = ModeAmplitudes::new(
            Complex64::new(theta.cos(), 0.0),
            Complex64::from_polar(theta.sin(), phase),
        );
        let d = dynamics::derivative(&s, &params(a, b, delta), t).unwrap();
        let rate = 2.0 * (s.c0.conj() * d.c0 + s.cp.conj() * d.cp).re;
        prop_assert!(rate.abs() < 1e-14);
    }

    #[test]
    fn rabi_reference_is_a_probability(b in 1e-3..5.0f64, delta in -5.0..5.0f64, t in 0.0..500.0f64) {
        let np = dynamics::rabi_reference(b, delta, t).unwrap();
        prop_assert!((0.0..=1.0 + 1e-15).contains(&np));
        prop_assert!(np <= b * b / (b * b + delta * delta) + 1e-15);
    }
}
