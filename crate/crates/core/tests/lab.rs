//! Sampled inequality checks and ODE bound oracles.

use chflow::elliptic::EllipticWorkspace;
use chflow::grid::make_grid;
use chflow::lab::blowup::bb_ode_comparison;
use chflow::lab::fields::RandomFieldSpec;
use chflow::lab::gn::{gn_inequality_sweep, GN_SLOPE_LIMIT};
use chflow::lab::gronwall::{
    gronwall_liu_zhang_bound, liu_zhang_from_parts, power_oracle, power_sweep, uniform_gronwall_bound, uniform_oracle,
    uniform_sweep, LinearOdeSpec, OdeSpec, OdeVariant,
};
use chflow::lab::h2bb::{h2bb_estimate_report, h2bb_refinement_study, max_refinement_growth, random_pairs};
use chflow::lab::suite::{run_suite, SUITES};
use chflow::rng::purpose;
use chflow::thermo::MobilitySpec;

#[test]
fn liu_zhang_bound_closed_form_and_monotonicity() {
    // with ∫g = 0: f0 (2^{1/δ} + f0)^4
    let b = liu_zhang_from_parts(2.0, 1.0, 0.5, 0.0);
    assert!((b.value - 2.0 * 6.0f64.powi(4)).abs() < 1e-9);
    assert!(!b.overflow);
    let base = liu_zhang_from_parts(1.5, 0.7, 0.4, 0.3).ln_value;
    assert!(liu_zhang_from_parts(1.6, 0.7, 0.4, 0.3).ln_value > base);
    assert!(liu_zhang_from_parts(1.5, 0.8, 0.4, 0.3).ln_value > base);
    assert!(liu_zhang_from_parts(1.5, 0.7, 0.3, 0.3).ln_value > base);
    assert!(liu_zhang_from_parts(1.5, 0.7, 0.4, 0.4).ln_value > base);
    // the value leaves f64 range while its logarithm stays representable
    let huge = liu_zhang_from_parts(1.5, 1.0, 0.5, 0.5);
    assert!(huge.overflow && huge.ln_value.is_finite() && huge.ln_value > 709.0);
}

#[test]
fn power_oracle_respects_the_bound_on_a_hand_made_case() {
    let spec = OdeSpec {
        f0: 1.2,
        m: 0.5,
        delta: 0.5,
        sigma: 0.3,
        g: vec![0.2, 0.0, 0.4, 0.1],
        t0: 1.0,
    };
    assert!((spec.integral_g() - 0.175).abs() < 1e-15);
    let bound = gronwall_liu_zhang_bound(&spec).unwrap();
    let o = power_oracle(&spec, OdeVariant::FixedSigma).unwrap();
    assert!(o.consistent && !o.violated);
    assert!(o.ln_max <= bound.ln_value);
    assert!(o.ln_max >= spec.f0.ln());
    assert!(gronwall_liu_zhang_bound(&OdeSpec {
        sigma: 0.6,
        ..spec.clone()
    })
    .is_err());
    assert!(gronwall_liu_zhang_bound(&OdeSpec { g: vec![-1.0], ..spec }).is_err());
}

#[test]
fn power_and_uniform_sweeps_have_no_violations() {
    for variant in [OdeVariant::FixedSigma, OdeVariant::Saturated] {
        let (summary, cases) = power_sweep(11, 20, variant).unwrap();
        assert_eq!(summary.cases, 20);
        assert_eq!(cases.len(), 20);
        assert_eq!((summary.violations, summary.inconsistent), (0, 0), "{variant:?}");
        assert!(summary.min_log_margin >= 0.0);
    }
    let (summary, _) = uniform_sweep(11, 20).unwrap();
    assert_eq!((summary.violations, summary.inconsistent), (0, 0));
    assert_eq!(
        power_sweep(5, 4, OdeVariant::Saturated).unwrap(),
        power_sweep(5, 4, OdeVariant::Saturated).unwrap()
    );
}

#[test]
fn uniform_bound_formula_and_oracle() {
    assert!((uniform_gronwall_bound(2.0, 1.0, 0.5, 4.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
    assert!(uniform_gronwall_bound(-1.0, 0.0, 0.0, 1.0).is_err());
    // constant source with damping: f stays below (a1/r + a3) e^{a2}
    let spec = LinearOdeSpec {
        f0: 0.5,
        g: vec![0.1; 20],
        h: vec![1.0; 20],
        k: vec![2.0; 20],
        t_end: 10.0,
        window_pieces: 2,
    };
    assert_eq!(spec.r(), 1.0);
    let o = uniform_oracle(&spec).unwrap();
    assert!(o.consistent && !o.violated);
    assert!(o.f_max <= o.bound);
}

#[test]
fn blowup_time_matches_the_closed_form_and_shrinks_with_rho() {
    // B' = (K/ρ) B^{2+2ρ}, B(0) = B0: t* = ρ B0^{-(1+2ρ)} / (K (1+2ρ))
    let (k, b0) = (2.0, 1.5);
    let rep = bb_ode_comparison(k, &[0.2, 0.1, 0.05, 0.01], b0, 1.0).unwrap();
    assert!(rep.decreasing_in_rho);
    for row in &rep.rows {
        let rho = row.rho.unwrap();
        let exact = rho * b0.powf(-(1.0 + 2.0 * rho)) / (k * (1.0 + 2.0 * rho));
        // the B = 1e12 event lies within ~1e-13 of the true blow-up
        let t = row.blowup_time.unwrap();
        assert_eq!(t, row.event_time);
        assert!(t <= exact);
        assert!((t - exact).abs() <= 1e-9 * exact, "rho {rho}: {t} vs {exact}");
        assert!(row.lemma_holds && row.consistent);
        assert_eq!(row.local_bound_holds, Some(true));
    }
    assert!(bb_ode_comparison(1.0, &[0.3], 1.0, 1.0).is_err());
    assert!(bb_ode_comparison(0.0, &[0.1], 1.0, 1.0).is_err());
}

#[test]
fn gn_ratio_shows_no_growth_in_r() {
    let spec = RandomFieldSpec {
        seed: 4,
        band_limit: 6,
        amplitude: 1.0,
        zero_mean: false,
        purpose: purpose::GN,
    };
    let grid = make_grid(32, 32, 1.0, 1.0).unwrap();
    let rep = gn_inequality_sweep(&spec, &[2.0, 4.0, 8.0, 16.0], grid, 20).unwrap();
    assert_eq!(rep.samples, 20);
    assert_eq!(rep.rows.len(), 4);
    assert!(rep.no_growth && rep.slope <= GN_SLOPE_LIMIT);
    assert!(rep
        .rows
        .iter()
        .all(|r| r.mean_ratio <= r.max_ratio && r.max_ratio <= 1.0));
}

#[test]
fn h2_constants_are_finite_and_bounded_under_refinement() {
    let spec = MobilitySpec::polynomial(vec![1.0, 0.5], 0.5, 1.5).unwrap();
    let grid = make_grid(16, 16, 1.0, 1.0).unwrap();
    let (q, f) = random_pairs(2, 6, 4, grid).unwrap();
    assert!(q.iter().all(|q| q.max_abs() <= 0.9));
    let rep = h2bb_estimate_report(&q, &f, &[2.5, 4.0, 8.0], &spec, &EllipticWorkspace::new(grid), true).unwrap();
    assert!(rep.all_finite && rep.h2_constant > 0.0);
    assert!(rep.w24_constant.is_some() && rep.h3_constant.is_some());
    assert!(h2bb_estimate_report(&q, &f, &[2.0], &spec, &EllipticWorkspace::new(grid), false).is_err());

    let study = h2bb_refinement_study(2, 6, 4, &[16, 32], &[4.0], &spec, false).unwrap();
    let growth = max_refinement_growth(&study);
    assert!(growth.is_finite() && growth < 1.5, "growth {growth}");
}

#[test]
fn every_suite_passes_and_unknown_names_fail() {
    for name in SUITES {
        let out = run_suite(name, 3).unwrap();
        assert!(out.passed, "{name}:\n{}", out.report);
    }
    assert!(run_suite("none", 3).is_err());
}
