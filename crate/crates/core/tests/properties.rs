//! Randomized invariants of the discrete operators and helpers.

use chflow::elliptic::{hm1_norm, solve_g, weighted_dual_norm, EllipticWorkspace};
use chflow::grid::{laplacian_neumann, make_grid, Grid, ScalarField};
use chflow::io::gray_level;
use chflow::lab::gn::gn_ratio;
use chflow::lab::gronwall::liu_zhang_from_parts;
use chflow::thermo::{f_second, psi, psi_prime, MobilitySpec, PotentialParams};
use proptest::prelude::*;

fn grid() -> Grid {
    make_grid(8, 6, 1.0, 0.75).unwrap()
}

fn field() -> impl Strategy<Value = ScalarField> {
    prop::collection::vec(-0.9f64..0.9, 48).prop_map(|v| ScalarField::new(grid(), v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_mean_removes_the_mean_and_is_idempotent(f in field(), c in -0.5f64..0.5) {
        let z = f.map(|v| v + c).zero_mean();
        prop_assert!(z.mean().abs() < 1e-16);
        prop_assert!(z.zero_mean().sub(&z).unwrap().max_abs() < 1e-16);
    }

    #[test]
    fn laplacian_is_symmetric_and_nonpositive(f in field(), g in field()) {
        let (lf, lg) = (laplacian_neumann(&f).unwrap(), laplacian_neumann(&g).unwrap());
        let scale = 1.0 + lf.inner(&g).abs();
        prop_assert!((lf.inner(&g) - f.inner(&lg)).abs() < 1e-12 * scale);
        prop_assert!(lf.inner(&f) <= 1e-12);
        prop_assert!(lf.mean().abs() < 1e-12);
    }

    #[test]
    fn inverse_laplacian_inverts_on_zero_mean_data(f in field()) {
        let f = f.zero_mean();
        let u = solve_g(&f).unwrap();
        let back = laplacian_neumann(&u).unwrap().scale(-1.0);
        prop_assert!(back.sub(&f).unwrap().max_abs() < 1e-10);
        prop_assert!(u.mean().abs() < 1e-14);
    }

    #[test]
    fn weighted_norm_is_sandwiched_by_the_mobility_bounds(q in field(), f in field()) {
        let spec = MobilitySpec::polynomial(vec![1.0, 0.5], 0.5, 1.5).unwrap();
        let f = f.zero_mean();
        let mut ws = EllipticWorkspace::new(grid());
        let d = weighted_dual_norm(&q, &f, &spec, &mut ws).unwrap();
        let h = hm1_norm(&f).unwrap();
        prop_assert!(0.5f64.sqrt() * d <= h * (1.0 + 1e-9));
        prop_assert!(h <= 1.5f64.sqrt() * d * (1.0 + 1e-9));
    }

    #[test]
    fn gn_ratio_is_scale_invariant(f in field(), a in 0.01f64..100.0, r in 2.0f64..64.0) {
        if let (Some(x), Some(y)) = (gn_ratio(&f, r), gn_ratio(&f.scale(a), r)) {
            prop_assert!((x - y).abs() <= 1e-12 * x);
        }
    }

    #[test]
    fn gray_levels_are_monotone(a in -1.5f64..1.5, b in -1.5f64..1.5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(gray_level(lo) <= gray_level(hi));
    }

    #[test]
    fn potential_is_even_and_convex_part_is_convex(s in -0.999f64..0.999, th in 0.1f64..2.0, extra in 0.01f64..3.0) {
        let p = PotentialParams::new(th, th + extra).unwrap();
        prop_assert!((psi(s, &p).unwrap() - psi(-s, &p).unwrap()).abs() <= 1e-14 * (1.0 + psi(s, &p).unwrap().abs()));
        prop_assert_eq!(psi_prime(s, &p).unwrap(), -psi_prime(-s, &p).unwrap());
        prop_assert!(f_second(s, &p).unwrap() >= th);
    }

    #[test]
    fn liu_zhang_bound_dominates_the_initial_value(f0 in 0.01f64..10.0, m in 0.01f64..2.0, d in 0.05f64..1.0, ig in 0.0f64..0.2) {
        let b = liu_zhang_from_parts(f0, m, d, ig);
        prop_assert!(b.ln_value >= f0.ln());
        prop_assert!(liu_zhang_from_parts(f0, m, d, ig + 0.01).ln_value >= b.ln_value);
    }
}
