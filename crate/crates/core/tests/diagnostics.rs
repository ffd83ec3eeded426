//! Ledger diagnostics and the continuous-dependence experiment.

use chflow::diagnostics::{continuous_dependence_experiment, lambda_b_series, mu_mean_check, separation_margin};
use chflow::grid::{make_grid, ScalarField};
use chflow::init::{band_limited, perturbation};
use chflow::stepper::{run, AdaptiveConfig, SimState, StepperConfig};
use chflow::thermo::{psi_prime_field, MobilitySpec, PotentialParams};

fn params() -> PotentialParams {
    PotentialParams::new(1.0, 2.0).unwrap()
}

fn mobility() -> MobilitySpec {
    MobilitySpec::polynomial(vec![1.0, 0.5], 0.5, 1.5).unwrap()
}

#[test]
fn ledger_columns_are_consistent() {
    let g = make_grid(16, 16, 1.0, 1.0).unwrap();
    let phi0 = band_limited(g, 0.1, 0.1, 3, 2).unwrap();
    let cfg = StepperConfig {
        dt: 1e-3,
        ..Default::default()
    };
    let (end, ledger) = run(&phi0, 0.2, &cfg, &params(), &mobility(), None).unwrap();
    for r in &ledger.rows {
        assert!((r.b - 1.0 - r.lambda).abs() < 1e-14);
        // b ∈ [0.5, 1.5] brackets the weighted dissipation
        assert!(r.lambda >= 0.5 * r.grad_mu_sq - 1e-15 && r.lambda <= 1.5 * r.grad_mu_sq + 1e-15);
        assert!(r.e >= r.e0 - 1e-14 || r.e < r.e0);
    }
    assert!(ledger
        .rows
        .windows(2)
        .all(|w| w[1].cum_dissipation >= w[0].cum_dissipation));
    let last = ledger.last().unwrap();
    assert_eq!(last.sep, separation_margin(&end.phi));
    let series = lambda_b_series(&ledger);
    assert_eq!(series.t.len(), ledger.len());
    assert!(series.b_defect < 1e-14);
    assert_eq!(series.sup_after[0].0, 0.1);
    assert!(series.sup_after[0].1.is_some() && series.sup_after[2].1.is_none());
}

#[test]
fn separation_margin_is_distance_to_pure_phase() {
    let g = make_grid(4, 4, 1.0, 1.0).unwrap();
    let mut v = vec![0.0; 16];
    v[5] = -0.75;
    v[9] = 0.5;
    let f = ScalarField::new(g, v).unwrap();
    assert!((separation_margin(&f) - 0.25).abs() < 1e-15);
}

#[test]
fn mean_chemical_potential_is_the_mean_of_the_potential_derivative() {
    let g = make_grid(16, 16, 1.0, 1.0).unwrap();
    let phi = band_limited(g, 0.3, 0.1, 3, 4).unwrap();
    let s = SimState::new(phi.clone(), &params()).unwrap();
    let r = mu_mean_check(&s, &params());
    assert!((r.mu_bar - psi_prime_field(&phi, &params()).mean()).abs() < 1e-15);
    // the Laplacian term has zero mean under Neumann conditions
    assert!((r.mu_bar_state - r.mu_bar).abs() < 1e-12);
    assert!((r.ratio - r.mu_bar.abs() / (1.0 + r.grad_mu)).abs() < 1e-15);
}

#[test]
fn nearby_trajectories_stay_close_in_the_weighted_metric() {
    // spinodal channel: the perturbation may grow but stays proportional to ε
    let g = make_grid(32, 4, 8.0, 1.0).unwrap();
    let base = band_limited(g, 0.0, 0.05, 4, 1).unwrap();
    let cfg = StepperConfig {
        dt: 1e-2,
        ..Default::default()
    };
    let ratio = |eps: f64| {
        let pert = base.axpy(1.0, &perturbation(g, eps, 1).unwrap()).unwrap();
        let rep = continuous_dependence_experiment(&base, &pert, 1.0, &cfg, &params(), &mobility(), 10).unwrap();
        assert!(rep.sandwich_holds);
        assert_eq!(rep.t.len(), 11);
        assert!(rep.d.iter().all(|d| d.is_finite() && *d > 0.0));
        rep.c_emp.unwrap()
    };
    let (c1, c2) = (ratio(1e-6), ratio(5e-7));
    assert!(c1 >= 1.0);
    assert!((c1 - c2).abs() / c1 < 0.01, "{c1} vs {c2}");
}

#[test]
fn identical_data_give_zero_distance_and_no_constant() {
    let g = make_grid(8, 8, 1.0, 1.0).unwrap();
    let phi = band_limited(g, 0.0, 0.05, 2, 1).unwrap();
    let cfg = StepperConfig {
        dt: 1e-3,
        ..Default::default()
    };
    let rep = continuous_dependence_experiment(&phi, &phi, 0.01, &cfg, &params(), &mobility(), 5).unwrap();
    assert!(rep.d.iter().all(|d| *d == 0.0));
    assert_eq!(rep.c_emp, None);
    assert_eq!(rep.ratio_end(), None);
}

#[test]
fn experiment_preconditions_are_enforced() {
    let g = make_grid(8, 8, 1.0, 1.0).unwrap();
    let a = ScalarField::constant(g, 0.0);
    let b = ScalarField::constant(g, 0.1);
    let fixed = StepperConfig {
        dt: 1e-3,
        ..Default::default()
    };
    assert!(continuous_dependence_experiment(&a, &b, 0.01, &fixed, &params(), &mobility(), 1).is_err());
    let adaptive = StepperConfig {
        adaptive: Some(AdaptiveConfig::default()),
        ..fixed
    };
    assert!(continuous_dependence_experiment(&a, &a, 0.01, &adaptive, &params(), &mobility(), 1).is_err());
    let degenerate = MobilitySpec::degenerate(1.0).unwrap();
    assert!(continuous_dependence_experiment(&a, &a, 0.01, &fixed, &params(), &degenerate, 1).is_err());
}
