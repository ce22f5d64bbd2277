use proptest::prelude::*;
use topomode::order::{self, AveragingConfig, CriticalConfig, CriticalKind, RegimeLabel};
use topomode::{DimensionlessParams, Error, ModeAmplitudes};

fn params(a: f64, b: f64, delta: f64) -> DimensionlessParams {
    DimensionlessParams::new(a, b, delta).unwrap()
}

fn eta_at(a: f64, b: f64, delta: f64) -> f64 {
    order::eta(
        &params(a, b, delta),
        &ModeAmplitudes::ground(),
        &AveragingConfig::default(),
    )
    .unwrap()
    .eta
}

#[test]
fn unlocked_resonant_average_is_balanced() {
    assert!(eta_at(1.0, 0.6, 0.0).abs() < 0.01);
}

#[test]
fn off_resonant_weak_pump_is_locked() {
    let label = order::classify_regime(
        &params(0.1, 0.2, 0.45),
        &ModeAmplitudes::ground(),
        &AveragingConfig::default(),
    )
    .unwrap();
    assert_eq!(label, RegimeLabel::Locked);
}

#[test]
fn locked_orbit_has_a_period_and_positive_minimum() {
    let traj = topomode::dynamics::integrate(&params(1.0, 0.4, 0.0), &ModeAmplitudes::ground(), 200.0, 1e-10).unwrap();
    let period = order::detect_period(&traj).expect("locked orbit is periodic");
    assert!(period.is_finite() && period > 0.0);
    let s = traj.populations().difference();
    assert!(s.iter().cloned().fold(f64::INFINITY, f64::min) > 0.0);
}

#[test]
fn resonant_eta_decreases_below_threshold() {
    let grid: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
    let sweep = order::sweep_eta(1.0, 0.0, &grid, &AveragingConfig::default()).unwrap();
    let etas: Vec<f64> = sweep.iter().map(|p| p.outcome.as_ref().unwrap().eta).collect();
    for i in 0..etas.len() {
        for j in i + 1..etas.len() {
            assert!(
                etas[i] >= etas[j] - 0.02,
                "eta({}) = {} < eta({}) = {}",
                grid[i],
                etas[i],
                grid[j],
                etas[j]
            );
        }
    }
    assert!(etas.iter().all(|&e| e > 0.0));
}

#[test]
fn resonant_sweep_is_step_shaped() {
    let grid = [0.3, 0.4, 0.45, 0.49, 0.51, 0.55, 0.6, 0.7];
    let sweep = order::sweep_eta(1.0, 0.0, &grid, &AveragingConfig::default()).unwrap();
    for p in &sweep {
        let e = p.outcome.as_ref().unwrap().eta;
        if p.b < 0.5 {
            assert!(e > 0.1, "b = {}: eta = {e}", p.b);
        } else {
            assert!(e.abs() < 0.02, "b = {}: eta = {e}", p.b);
        }
    }
}

#[test]
fn weak_interaction_vanishes_smoothly() {
    let grid: Vec<f64> = (0..=60).map(|k| 0.05 * k as f64).collect();
    let sweep = order::sweep_eta(0.1, 0.0, &grid, &AveragingConfig::default()).unwrap();
    let etas: Vec<f64> = sweep.iter().map(|p| p.outcome.as_ref().unwrap().eta).collect();
    for w in etas.windows(2) {
        assert!((w[1] - w[0]).abs() < 0.1, "jump between {} and {}", w[0], w[1]);
    }
    assert!(etas.last().unwrap().abs() < 0.02);
}

#[test]
fn finer_sampling_keeps_eta() {
    let coarse = AveragingConfig::default();
    let fine = AveragingConfig {
        samples_per_period: 2 * coarse.samples_per_period,
        ..coarse
    };
    for (a, b, delta) in [
        (1.0, 0.3, 0.0),
        (1.0, 0.45, 0.0),
        (0.8, 0.57, 0.0),
        (0.1, 0.2, 0.45),
        (0.5, 0.8, 0.3),
    ] {
        let p = params(a, b, delta);
        let x = order::eta(&p, &ModeAmplitudes::ground(), &coarse).unwrap();
        let y = order::eta(&p, &ModeAmplitudes::ground(), &fine).unwrap();
        if x.converged && y.converged {
            assert!(
                (x.eta - y.eta).abs() < coarse.tolerance,
                "({a}, {b}, {delta}): {} vs {}",
                x.eta,
                y.eta
            );
        }
    }
}

#[test]
fn resonant_classifier_agrees_with_eta() {
    let cfg = AveragingConfig::default();
    for b in [0.1, 0.2, 0.3, 0.4, 0.45, 0.55, 0.6, 0.8, 1.0, 1.5] {
        let (label, est) = order::classify_with_eta(&params(1.0, b, 0.0), &ModeAmplitudes::ground(), &cfg).unwrap();
        match label {
            RegimeLabel::Unlocked => assert!(est.eta <= 0.05, "b = {b}: eta = {}", est.eta),
            RegimeLabel::Locked => assert!(est.eta > 0.0, "b = {b}: eta = {}", est.eta),
            RegimeLabel::NearCritical => {}
        }
    }
}

#[test]
fn refined_bisection_stays_in_bracket() {
    let cfg = CriticalConfig::default();
    for (a, delta, bracket, tol) in [(1.0, 0.0, (0.4, 0.6), 5e-4), (0.1, 0.45, (0.2, 0.4), 1e-4)] {
        let coarse = order::find_critical_b(a, delta, bracket, tol, &cfg).unwrap();
        let fine = order::find_critical_b(a, delta, bracket, tol / 10.0, &cfg).unwrap();
        assert!(coarse.bracket_width <= tol && coarse.bracket_width > 0.0);
        assert!(
            coarse.bracket.0 <= fine.critical && fine.critical <= coarse.bracket.1,
            "{fine:?} outside {coarse:?}"
        );
        assert_eq!(coarse.kind, CriticalKind::Jump);
        assert!((coarse.eta_below - coarse.eta_above).abs() > cfg.jump_threshold);
    }
}

#[test]
fn bracket_without_transition_is_rejected() {
    let err = order::find_critical_b(1.0, 0.0, (0.1, 0.2), 1e-3, &CriticalConfig::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidBracket { .. }));
    assert!(err.is_validation());
}

#[test]
fn sweep_preserves_grid_order() {
    let grid = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];
    let sweep = order::sweep_eta(0.7, 0.1, &grid, &AveragingConfig::default()).unwrap();
    let bs: Vec<f64> = sweep.iter().map(|p| p.b).collect();
    assert_eq!(bs, grid);
    assert_eq!(sweep[0].outcome.as_ref().unwrap().eta, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn eta_is_a_bounded_population_imbalance(a in 0.0..2.0f64, b in 0.0..1.5f64, delta in -1.0..1.0f64) {
        let cfg = AveragingConfig { max_horizon: 400.0, ..AveragingConfig::default() };
        let est = order::eta(&params(a, b, delta), &ModeAmplitudes::ground(), &cfg).unwrap();
        prop_assert!((-1.0..=1.0).contains(&est.eta));
        prop_assert!((est.eta - (2.0 * est.mean_n0 - 1.0)).abs() < 1e-12);
        prop_assert!((est.mean_n0 + est.mean_np - 1.0).abs() < 1e-6);
    }

    #[test]
    fn undriven_eta_is_one(a in 0.0..10.0f64, delta in -10.0..10.0f64) {
        let est = order::eta(&params(a, 0.0, delta), &ModeAmplitudes::ground(), &AveragingConfig::default()).unwrap();
        prop_assert_eq!(est.eta, 1.0);
    }
}
