use topomode::experiment::{self, DrivenExperiment};
use topomode::order::AveragingConfig;
use topomode::{units, ModeCache, ModeIndex, PhysicalSetup, SolvedSetup};

fn reference() -> SolvedSetup {
    SolvedSetup::solve(&PhysicalSetup::rb87_reference()).unwrap()
}

#[test]
fn pump_is_linear_in_gradient() {
    let solved = reference();
    let grid: Vec<f64> = (0..=12).map(|k| 0.025 * k as f64).collect();
    let bs: Vec<f64> = grid.iter().map(|&a| solved.params(a, -2.0).unwrap().b).collect();
    let slope = bs[grid.len() - 1] / grid[grid.len() - 1];
    for (i, j, k) in [(0, 5, 12), (1, 2, 3), (3, 7, 11), (2, 9, 10)] {
        // Residual of the line through points i and k, evaluated at j.
        let fit = bs[i] + (bs[k] - bs[i]) * (grid[j] - grid[i]) / (grid[k] - grid[i]);
        assert!(
            (fit - bs[j]).abs() <= 1e-10 * bs[j].abs().max(slope * grid[k]),
            "{i} {j} {k}"
        );
    }
}

#[test]
fn interaction_ratio_and_detuning_ignore_gradient() {
    let solved = reference();
    let first = solved.params(0.0, 13.0).unwrap();
    for a in [0.01, 0.068, 0.1, 0.25, 1.0] {
        let p = solved.params(a, 13.0).unwrap();
        assert_eq!(p.a, first.a);
        assert_eq!(p.delta, first.delta);
    }
    assert_eq!(first.b, 0.0);
}

#[test]
fn detuning_scales_with_alpha() {
    let solved = reference();
    let p = solved.params(0.1, -36.0).unwrap();
    let expected = units::hz_to_rad_per_s(-36.0) / solved.alpha_p0;
    assert_eq!(p.delta, expected);
}

#[test]
fn time_conversion_round_trips() {
    let solved = reference();
    for t in [0.0, 1.0, 50.0, 2000.0, 12345.678] {
        let back = solved.dimensionless_time(solved.seconds(t));
        assert!((back - t).abs() <= 4.0 * f64::EPSILON * t.abs());
    }
}

#[test]
fn mapped_parameters_carry_time_scale() {
    let setup = PhysicalSetup::rb87_reference();
    let mapped = experiment::dimensionless_params(&DrivenExperiment {
        setup,
        gradient_gauss_per_cm: 0.096,
        detuning_hz: -2.0,
    })
    .unwrap();
    let solved = SolvedSetup::solve(&setup).unwrap();
    assert_eq!(mapped.alpha_p0, solved.alpha_p0);
    assert_eq!(mapped.params, solved.params(0.096, -2.0).unwrap());
}

#[test]
fn beta_selection_rules_in_physical_units() {
    let setup = PhysicalSetup::rb87_reference();
    let allowed = experiment::quad_beta(&setup, 0.1, ModeIndex::Breathing).unwrap();
    assert!(allowed.abs() > 0.0);
    for p in [ModeIndex::Axial, ModeIndex::Vortex] {
        let beta = experiment::quad_beta(&setup, 0.1, p).unwrap();
        assert!(beta.abs() < 1e-10 * allowed.abs(), "{p}: {beta:e}");
    }
    let doubled = experiment::quad_beta(&setup, 0.2, ModeIndex::Breathing).unwrap();
    assert!((doubled - 2.0 * allowed).abs() <= 1e-12 * doubled.abs());
}

#[test]
fn alpha_vanishes_with_scattering_length() {
    let mut setup = PhysicalSetup::rb87_reference();
    setup.species.atom_number = 2;
    let mut last = f64::INFINITY;
    for a_s in [1e-9, 1e-11, 1e-13] {
        setup.species.scattering_length_m = a_s;
        let alpha = experiment::alpha(ModeIndex::Ground, ModeIndex::Ground, &setup).unwrap();
        assert!(alpha > 0.0 && alpha < last);
        last = alpha;
    }
    let ratio = {
        setup.species.scattering_length_m = 1e-13;
        let small = experiment::alpha(ModeIndex::Ground, ModeIndex::Ground, &setup).unwrap();
        setup.species.scattering_length_m = 2e-13;
        experiment::alpha(ModeIndex::Ground, ModeIndex::Ground, &setup).unwrap() / small
    };
    assert!((ratio - 2.0).abs() < 1e-6, "{ratio}");
}

#[test]
fn interaction_ratio_is_physical() {
    let solved = reference();
    let a = solved.interaction_ratio();
    assert!(a > 0.0 && a < 2.0, "{a}");
    assert!(solved.mode_overlap.abs() > 0.0);
}

#[test]
fn cache_reuses_minimized_modes() {
    let cache = ModeCache::new();
    let setup = PhysicalSetup::rb87_reference();
    let first = SolvedSetup::solve_with_cache(&setup, Some(&cache)).unwrap();
    assert_eq!(cache.len(), 2);
    let second = SolvedSetup::solve_with_cache(&setup, Some(&cache)).unwrap();
    assert_eq!(first, second);
    assert_eq!(first, SolvedSetup::solve(&setup).unwrap());
}

#[test]
fn zero_gradient_row_is_undriven() {
    let solved = reference();
    let rows = experiment::eta_vs_gradient(&solved, 13.0, &[0.0, 0.02], &AveragingConfig::default()).unwrap();
    assert_eq!(rows[0].outcome.as_ref().unwrap().eta, 1.0);
    assert!(rows[1].outcome.as_ref().unwrap().eta < 1.0);
}

#[test]
fn unsorted_gradient_grid_is_rejected() {
    let solved = reference();
    let err = experiment::eta_vs_gradient(&solved, 0.0, &[0.1, 0.05], &AveragingConfig::default()).unwrap_err();
    assert!(err.is_validation());
}
