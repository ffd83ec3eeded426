//! Inverse Neumann Laplacian `G`, the weighted inverse `G_q`, and the dual
//! norms built from them.
//!
//! `G f` is the zero-mean solution of `-Δ_h u = f`; `G_q f` is the zero-mean
//! solution of `-div_h(b(q) ∇_h u) = f`. Both require mean-free data.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{div_b_grad_into, inner, same_grid, weighted_grad_inner, FaceCoeffs, Grid, ScalarField};
use crate::linalg::{pcg, StopNorm};
use crate::spectral::NeumannSpectral;
use crate::thermo::MobilitySpec;

/// Relative mean tolerance for data handed to `G` and `G_q`.
pub const MEAN_TOL: f64 = 1e-10;

/// Solver state for one grid; not to be shared between concurrent solves.
#[derive(Debug, Clone)]
pub struct EllipticWorkspace {
    spectral: NeumannSpectral,
    pcg_tol: f64,
    pcg_max_iter: usize,
    last_iterations: usize,
}

impl EllipticWorkspace {
    /// Workspace with `pcg_tol = 1e-10` and `pcg_max_iter = 500`.
    pub fn new(grid: Grid) -> Self {
        Self {
            spectral: NeumannSpectral::new(grid),
            pcg_tol: 1e-10,
            pcg_max_iter: 500,
            last_iterations: 0,
        }
    }

    pub fn with_tolerances(grid: Grid, pcg_tol: f64, pcg_max_iter: usize) -> Result<Self> {
        if !(pcg_tol > 0.0 && pcg_tol < 1.0) || pcg_max_iter == 0 {
            return Err(Error::InvalidParameter(format!(
                "pcg_tol must lie in (0, 1) and pcg_max_iter be positive (got {pcg_tol}, {pcg_max_iter})"
            )));
        }
        Ok(Self {
            pcg_tol,
            pcg_max_iter,
            ..Self::new(grid)
        })
    }

    pub fn grid(&self) -> &Grid {
        self.spectral.grid()
    }

    pub fn spectral(&self) -> &NeumannSpectral {
        &self.spectral
    }

    pub fn pcg_tol(&self) -> f64 {
        self.pcg_tol
    }

    pub fn pcg_max_iter(&self) -> usize {
        self.pcg_max_iter
    }

    /// PCG iterations used by the most recent weighted solve.
    pub fn last_iterations(&self) -> usize {
        self.last_iterations
    }
}

fn require_zero_mean(f: &[f64]) -> Result<()> {
    let m = crate::grid::mean(f);
    let scale = f.iter().map(|v| v.abs()).sum::<f64>() / f.len() as f64;
    if m.abs() > MEAN_TOL * scale {
        Err(Error::NonZeroMean { mean: m })
    } else {
        Ok(())
    }
}

fn remove_mean(v: &mut [f64]) {
    let m = crate::grid::mean(v);
    v.iter_mut().for_each(|x| *x -= m);
}

pub(crate) fn g_into(sp: &NeumannSpectral, f: &[f64], out: &mut [f64]) -> Result<()> {
    require_zero_mean(f)?;
    sp.apply_symbol(f, out, |k| if k == 0.0 { 0.0 } else { 1.0 / k });
    Ok(())
}

/// `G f`: zero-mean solution of `-Δ_h u = f`.
pub fn solve_g(f: &ScalarField) -> Result<ScalarField> {
    solve_g_with(&NeumannSpectral::new(*f.grid()), f)
}

/// [`solve_g`] reusing planned transforms.
pub fn solve_g_with(sp: &NeumannSpectral, f: &ScalarField) -> Result<ScalarField> {
    same_grid(sp.grid(), f.grid())?;
    let mut out = vec![0.0; f.grid().len()];
    g_into(sp, f.values(), &mut out)?;
    Ok(ScalarField::from_vec(*f.grid(), out))
}

/// `G_q f` for a given face mobility `b`.
pub fn solve_gq_faces(b: &FaceCoeffs, f: &ScalarField, ws: &mut EllipticWorkspace) -> Result<ScalarField> {
    same_grid(ws.grid(), f.grid())?;
    same_grid(ws.grid(), b.grid())?;
    require_zero_mean(f.values())?;
    let (lo, _) = b.interior_range();
    if !(lo > 0.0) {
        return Err(Error::Refused(
            "weighted inverse needs strictly positive face mobility".into(),
        ));
    }
    let n = f.grid().len();
    let mut rhs = f.values().to_vec();
    remove_mean(&mut rhs);
    let mut x = vec![0.0; n];
    let sp = &ws.spectral;
    let out = pcg(
        |p, ap| {
            div_b_grad_into(b, p, ap);
            ap.iter_mut().for_each(|v| *v = -*v);
        },
        |r, z| sp.apply_symbol(r, z, |k| if k == 0.0 { 0.0 } else { 1.0 / k }),
        &rhs,
        &mut x,
        ws.pcg_tol,
        ws.pcg_max_iter,
        StopNorm::Residual,
        true,
    );
    ws.last_iterations = out.iterations;
    if !out.converged {
        return Err(Error::NotConverged {
            solver: "weighted elliptic PCG",
            iterations: out.iterations,
            residual: out.rel_residual,
        });
    }
    remove_mean(&mut x);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("weighted elliptic solution".into()));
    }
    Ok(ScalarField::from_vec(*f.grid(), x))
}

fn weight_faces(q: &ScalarField, spec: &MobilitySpec) -> Result<FaceCoeffs> {
    if spec.is_degenerate() {
        return Err(Error::Refused(
            "degenerate mobility gives no coercive weighted operator".into(),
        ));
    }
    if let Some(v) = q.values().iter().find(|v| v.abs() > 1.0) {
        return Err(Error::Domain {
            value: *v,
            domain: "[-1, 1]",
        });
    }
    spec.face_mobility(q)
}

/// `G_q f`: zero-mean solution of `-div_h(b(q) ∇_h u) = f`.
pub fn solve_gq(
    q: &ScalarField,
    f: &ScalarField,
    spec: &MobilitySpec,
    ws: &mut EllipticWorkspace,
) -> Result<ScalarField> {
    same_grid(q.grid(), f.grid())?;
    let b = weight_faces(q, spec)?;
    solve_gq_faces(&b, f, ws)
}

/// `‖∇_h G f‖`.
pub fn hm1_norm(f: &ScalarField) -> Result<f64> {
    hm1_norm_with(&NeumannSpectral::new(*f.grid()), f)
}

/// [`hm1_norm`] reusing planned transforms.
pub fn hm1_norm_with(sp: &NeumannSpectral, f: &ScalarField) -> Result<f64> {
    let u = solve_g_with(sp, f)?;
    // (∇Gf, ∇Gf) = (f, Gf) exactly by summation by parts
    Ok(weighted_grad_inner(None, f.grid(), u.values(), u.values())
        .max(0.0)
        .sqrt())
}

/// `‖√b ∇_h G_q f‖` for given face mobility.
pub fn weighted_dual_norm_faces(b: &FaceCoeffs, f: &ScalarField, ws: &mut EllipticWorkspace) -> Result<f64> {
    let u = solve_gq_faces(b, f, ws)?;
    Ok(weighted_grad_inner(Some(b), f.grid(), u.values(), u.values())
        .max(0.0)
        .sqrt())
}

/// `‖√b(q) ∇_h G_q f‖`.
pub fn weighted_dual_norm(
    q: &ScalarField,
    f: &ScalarField,
    spec: &MobilitySpec,
    ws: &mut EllipticWorkspace,
) -> Result<f64> {
    same_grid(q.grid(), f.grid())?;
    let b = weight_faces(q, spec)?;
    weighted_dual_norm_faces(&b, f, ws)
}

/// Defects of the self-adjointness and interpolation identities of `G_q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    /// `|⟨f, G_q g⟩ - ⟨g, G_q f⟩|`
    pub symmetry_defect: f64,
    /// `|(b(q)∇G_q f, ∇G_q g) - (b(q)∇G_q g, ∇G_q f)|`
    pub adjoint_defect: f64,
    /// `‖f‖²`
    pub l2_sq: f64,
    /// `(b(q)∇G_q f, ∇f)`, equal to `‖f‖²` by construction
    pub weighted_pairing: f64,
    /// `|‖f‖² - (b(q)∇G_q f, ∇f)|`
    pub weighted_defect: f64,
    /// `(∇G_q f, ∇f)` without the weight
    pub unweighted_pairing: f64,
    /// `|‖f‖² - (∇G_q f, ∇f)|`
    pub unweighted_defect: f64,
}

/// Evaluate the self-adjointness and interpolation identities for `G_q`.
///
/// The weighted pairing `(b(q)∇G_q f, ∇f)` reproduces `‖f‖²` exactly; the
/// unweighted pairing is reported alongside and differs unless `b ≡ 1`.
pub fn check_identities(
    q: &ScalarField,
    f: &ScalarField,
    g: &ScalarField,
    spec: &MobilitySpec,
    ws: &mut EllipticWorkspace,
) -> Result<IdentityReport> {
    same_grid(q.grid(), g.grid())?;
    let b = weight_faces(q, spec)?;
    let gf = solve_gq_faces(&b, f, ws)?;
    let gg = solve_gq_faces(&b, g, ws)?;
    let grid = f.grid();
    let symmetry_defect = (inner(grid, f.values(), gg.values()) - inner(grid, g.values(), gf.values())).abs();
    let adjoint_defect = (weighted_grad_inner(Some(&b), grid, gf.values(), gg.values())
        - weighted_grad_inner(Some(&b), grid, gg.values(), gf.values()))
    .abs();
    let l2_sq = f.inner(f);
    let weighted_pairing = weighted_grad_inner(Some(&b), grid, gf.values(), f.values());
    let unweighted_pairing = weighted_grad_inner(None, grid, gf.values(), f.values());
    Ok(IdentityReport {
        symmetry_defect,
        adjoint_defect,
        l2_sq,
        weighted_pairing,
        weighted_defect: (l2_sq - weighted_pairing).abs(),
        unweighted_pairing,
        unweighted_defect: (l2_sq - unweighted_pairing).abs(),
    })
}

/// Reference solution of `-div_h(b ∇_h u) = f`, `Σu = 0` by dense LU of the
/// bordered system; meant for small grids only.
pub fn dense_weighted_solve(b: &FaceCoeffs, f: &ScalarField) -> Result<Vec<f64>> {
    same_grid(b.grid(), f.grid())?;
    let n = f.grid().len();
    let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for k in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[k] = 1.0;
        div_b_grad_into(b, &e, &mut col);
        for r in 0..n {
            a[(r, k)] = -col[r];
        }
        a[(n, k)] = 1.0;
        a[(k, n)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n + 1);
    for k in 0..n {
        rhs[k] = f.values()[k];
    }
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("bordered elliptic matrix".into()))?;
    Ok(sol.iter().take(n).copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{laplacian_neumann, make_grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(g: Grid, rng: &mut ChaCha8Rng, amp: f64) -> ScalarField {
        ScalarField::new(g, (0..g.len()).map(|_| amp * rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn g_examples() {
        let g = make_grid(8, 8, 1.0, 1.0).unwrap();
        assert_eq!(solve_g(&ScalarField::zeros(g)).unwrap().max_abs(), 0.0);
        assert!(matches!(
            solve_g(&ScalarField::constant(g, 1.0)),
            Err(Error::NonZeroMean { .. })
        ));
        let f = ScalarField::from_fn(g, |x, _| (PI * x).cos()).unwrap();
        let lam1 = (2.0 / g.hx().powi(2)) * (1.0 - (PI * g.hx()).cos());
        let u = solve_g(&f).unwrap();
        for (a, b) in u.values().iter().zip(f.values()) {
            assert!((a - b / lam1).abs() < 1e-11);
        }
        let dense = dense_weighted_solve(&FaceCoeffs::constant(g, 1.0), &f).unwrap();
        for (a, b) in u.values().iter().zip(&dense) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn g_inverts_laplacian() {
        let g = make_grid(16, 12, 1.0, 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_field(g, &mut rng, 1.0).zero_mean();
        let u = solve_g(&f).unwrap();
        let back = laplacian_neumann(&u).unwrap().scale(-1.0);
        assert!(back.sub(&f).unwrap().norm_l2() <= 1e-11 * f.norm_l2());
        assert!(u.mean().abs() < 1e-14);
    }

    #[test]
    fn hm1_examples() {
        let g = make_grid(8, 8, 1.0, 1.0).unwrap();
        assert_eq!(hm1_norm(&ScalarField::zeros(g)).unwrap(), 0.0);
        let f = ScalarField::from_fn(g, |x, _| (PI * x).cos()).unwrap();
        let lam1 = (2.0 / g.hx().powi(2)) * (1.0 - (PI * g.hx()).cos());
        let h = hm1_norm(&f).unwrap();
        assert!((h - f.norm_l2() / lam1.sqrt()).abs() < 1e-12);
        assert!((hm1_norm(&f.scale(2.0)).unwrap() - 2.0 * h).abs() < 1e-12);
    }

    #[test]
    fn gq_matches_dense_lu() {
        let g = make_grid(8, 8, 1.0, 1.0).unwrap();
        let spec = MobilitySpec::polynomial_sampled(vec![1.0, 0.5]).unwrap();
        let mut ws = EllipticWorkspace::new(g);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let q = random_field(g, &mut rng, 0.95);
            let f = random_field(g, &mut rng, 1.0).zero_mean();
            let u = solve_gq(&q, &f, &spec, &mut ws).unwrap();
            let dense = dense_weighted_solve(&spec.face_mobility(&q).unwrap(), &f).unwrap();
            for (a, b) in u.values().iter().zip(&dense) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gq_constant_mobility_reduction_and_refusals() {
        let g = make_grid(16, 16, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_field(g, &mut rng, 1.0).zero_mean();
        let q = random_field(g, &mut rng, 0.5);
        let mut ws = EllipticWorkspace::new(g);
        let c = 2.5;
        let u = solve_gq(&q, &f, &MobilitySpec::constant(c).unwrap(), &mut ws).unwrap();
        let v = solve_g(&f).unwrap().scale(1.0 / c);
        assert!(u.sub(&v).unwrap().max_abs() < 1e-10);
        let z = solve_gq(&q, &ScalarField::zeros(g), &MobilitySpec::constant(c).unwrap(), &mut ws).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let deg = MobilitySpec::degenerate(1.0).unwrap();
        assert!(matches!(solve_gq(&q, &f, &deg, &mut ws), Err(Error::Refused(_))));
        let one = ScalarField::constant(g, 1.0);
        assert!(matches!(
            solve_gq(&q, &one, &MobilitySpec::constant(1.0).unwrap(), &mut ws),
            Err(Error::NonZeroMean { .. })
        ));
    }

    #[test]
    fn identities_hold() {
        let g = make_grid(16, 16, 1.0, 1.0).unwrap();
        let spec = MobilitySpec::polynomial_sampled(vec![1.0, 0.5]).unwrap();
        let mut ws = EllipticWorkspace::new(g);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = random_field(g, &mut rng, 0.9);
        let f = random_field(g, &mut rng, 1.0).zero_mean();
        let h = random_field(g, &mut rng, 1.0).zero_mean();
        let rep = check_identities(&q, &f, &h, &spec, &mut ws).unwrap();
        assert!(rep.symmetry_defect <= 1e-9);
        assert!(rep.adjoint_defect <= 1e-9);
        assert!(rep.weighted_defect <= 1e-9 * rep.l2_sq);
        let same = check_identities(&q, &f, &f, &spec, &mut ws).unwrap();
        assert_eq!(same.symmetry_defect, 0.0);
        let unit = MobilitySpec::constant(1.0).unwrap();
        let rep1 = check_identities(&q, &f, &h, &unit, &mut ws).unwrap();
        assert!(rep1.unweighted_defect <= 1e-10 * rep1.l2_sq);
    }

    #[test]
    fn linearity_and_iteration_bound() {
        let spec = MobilitySpec::polynomial_sampled(vec![1.0, 0.5]).unwrap();
        let bound = 4.0 * (spec.b_max() / spec.b_min()).sqrt() * (1e10f64).ln() + 10.0;
        for n in [16, 32, 64] {
            let g = make_grid(n, n, 1.0, 1.0).unwrap();
            let mut ws = EllipticWorkspace::new(g);
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let q = random_field(g, &mut rng, 1.0);
            let f1 = random_field(g, &mut rng, 1.0).zero_mean();
            let f2 = random_field(g, &mut rng, 1.0).zero_mean();
            let u1 = solve_gq(&q, &f1, &spec, &mut ws).unwrap();
            assert!((ws.last_iterations() as f64) <= bound);
            let u2 = solve_gq(&q, &f2, &spec, &mut ws).unwrap();
            let u12 = solve_gq(&q, &f1.axpy(1.0, &f2).unwrap(), &spec, &mut ws).unwrap();
            let diff = u12.sub(&u1.axpy(1.0, &u2).unwrap()).unwrap();
            assert!(diff.max_abs() <= 1e-9 * u12.max_abs().max(1.0));
        }
    }

    #[test]
    fn weighted_norm_examples() {
        let g = make_grid(16, 16, 1.0, 1.0).unwrap();
        let mut ws = EllipticWorkspace::new(g);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let q = random_field(g, &mut rng, 1.0);
        let f = random_field(g, &mut rng, 1.0).zero_mean();
        let unit = MobilitySpec::constant(1.0).unwrap();
        assert_eq!(
            weighted_dual_norm(&q, &ScalarField::zeros(g), &unit, &mut ws).unwrap(),
            0.0
        );
        let w = weighted_dual_norm(&q, &f, &unit, &mut ws).unwrap();
        assert!((w - hm1_norm(&f).unwrap()).abs() <= 1e-10 * w);
        let spec = MobilitySpec::polynomial_sampled(vec![1.0, 0.5]).unwrap();
        let w = weighted_dual_norm(&q, &f, &spec, &mut ws).unwrap();
        let h = hm1_norm(&f).unwrap();
        assert!(spec.b_min().sqrt() * w <= h * (1.0 + 1e-9));
        assert!(h <= spec.b_max().sqrt() * w * (1.0 + 1e-9));
    }
}
