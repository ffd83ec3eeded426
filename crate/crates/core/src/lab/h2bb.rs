//! Sampled constants of the `H²` regularity estimate for `G_q`,
//!
//! `‖G_q f‖_{H²} ≤ (C²s²/(s-2))^{s/4} ‖∇q‖^{(s-2)/2} ‖q‖_{H²} ‖∇G_q f‖ + (sC/2)‖f‖`,
//!
//! for `s > 2`. For each sample the smallest admissible `C` is found by
//! bisection (the right side increases in `C`); the report gives the maximum
//! over samples. The `s`-free form `‖G_q f‖_{H²} ≤ C(‖∇q‖‖q‖_{H²}‖∇G_q f‖ + ‖f‖)`
//! and, in extended mode, the `W^{2,4}` and `H³` forms are sampled alongside.

use rayon::prelude::*;

use super::fields::{grad_norm, h1_norm, h2_norm, h3_norm, lp_norm, w24_norm, RandomFieldSpec};
use crate::elliptic::{solve_gq, EllipticWorkspace};
use crate::error::{Error, Result};
use crate::grid::{make_grid, Grid, ScalarField};
use crate::rng::purpose;
use crate::thermo::MobilitySpec;

/// Norms entering the estimates for one `(q, f)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairNorms {
    /// `‖G_q f‖_{H²}`
    pub lhs: f64,
    pub grad_q: f64,
    pub q_h2: f64,
    /// `‖∇G_q f‖`
    pub grad_u: f64,
    pub f_l2: f64,
    /// `‖G_q f‖_{W^{2,4}} / (‖∇q‖^{1/4}‖q‖_{H²}^{3/4}‖∇G_q f‖^{1/4}‖G_q f‖_{H²}^{3/4} + ‖f‖_{L⁴})`
    pub w24_constant: Option<f64>,
    /// `‖G_q f‖_{H³} / (‖(b'/b)(q) ∇q·∇G_q f‖_{H¹} + ‖f/b(q)‖_{H¹})`
    pub h3_constant: Option<f64>,
}

impl PairNorms {
    /// `‖∇q‖^{(s-2)/2} ‖q‖_{H²} ‖∇G_q f‖`.
    pub fn x(&self, s: f64) -> f64 {
        self.grad_q.powf((s - 2.0) / 2.0) * self.q_h2 * self.grad_u
    }

    /// Smallest `C` for which the estimate holds at this `s`.
    pub fn c_star(&self, s: f64) -> f64 {
        min_constant(self.lhs, self.x(s), self.f_l2, s)
    }

    /// Constant of the `s`-free form.
    pub fn h2_constant(&self) -> Option<f64> {
        let d = self.grad_q * self.q_h2 * self.grad_u + self.f_l2;
        (d > 0.0).then(|| self.lhs / d)
    }
}

/// `(C²s²/(s-2))^{s/4} x + (sC/2) y`.
pub fn estimate_rhs(c: f64, s: f64, x: f64, y: f64) -> f64 {
    (c * c * s * s / (s - 2.0)).powf(s / 4.0) * x + 0.5 * s * c * y
}

/// Smallest `C ≥ 0` with `lhs ≤ estimate_rhs(C, s, x, y)`.
pub fn min_constant(lhs: f64, x: f64, y: f64, s: f64) -> f64 {
    if lhs <= 0.0 {
        return 0.0;
    }
    // each term alone reaching lhs caps the root
    let mut hi = f64::INFINITY;
    if y > 0.0 {
        hi = hi.min(2.0 * lhs / (s * y));
    }
    if x > 0.0 {
        hi = hi.min(((lhs / x).powf(4.0 / s) * (s - 2.0)).sqrt() / s);
    }
    if !hi.is_finite() {
        return f64::INFINITY;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if estimate_rhs(mid, s, x, y) >= lhs {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Cell-centered gradient: centered differences, Neumann mirror at walls.
fn cell_gradient(f: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let v = f.values();
    let mut gx = vec![0.0; g.len()];
    let mut gy = vec![0.0; g.len()];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let (l, r) = (
                if i > 0 { v[k - 1] } else { v[k] },
                if i + 1 < nx { v[k + 1] } else { v[k] },
            );
            let (d, u) = (
                if j > 0 { v[k - nx] } else { v[k] },
                if j + 1 < ny { v[k + nx] } else { v[k] },
            );
            gx[k] = (r - l) / (2.0 * g.hx());
            gy[k] = (u - d) / (2.0 * g.hy());
        }
    }
    (gx, gy)
}

/// Evaluate all norms for one pair; `f` must have zero mean and `|q| ≤ 1`.
pub fn pair_norms(
    q: &ScalarField,
    f: &ScalarField,
    spec: &MobilitySpec,
    ws: &mut EllipticWorkspace,
    extended: bool,
) -> Result<PairNorms> {
    let u = solve_gq(q, f, spec, ws)?;
    let lhs = h2_norm(&u);
    let (grad_q, q_h2, grad_u, f_l2) = (grad_norm(q), h2_norm(q), grad_norm(&u), f.norm_l2());
    let (mut w24_constant, mut h3_constant) = (None, None);
    if extended {
        let d = grad_q.powf(0.25) * q_h2.powf(0.75) * grad_u.powf(0.25) * lhs.powf(0.75) + lp_norm(f, 4.0);
        w24_constant = (d > 0.0).then(|| w24_norm(&u) / d);
        let (qx, qy) = cell_gradient(q);
        let (ux, uy) = cell_gradient(&u);
        let mut drift = vec![0.0; q.grid().len()];
        let mut fb = vec![0.0; q.grid().len()];
        for k in 0..drift.len() {
            let (b, bp, _) = spec.eval(q.values()[k])?;
            drift[k] = bp / b * (qx[k] * ux[k] + qy[k] * uy[k]);
            fb[k] = f.values()[k] / b;
        }
        let d = h1_norm(&ScalarField::new(*q.grid(), drift)?) + h1_norm(&ScalarField::new(*q.grid(), fb)?);
        h3_constant = (d > 0.0).then(|| h3_norm(&u) / d);
    }
    Ok(PairNorms {
        lhs,
        grad_q,
        q_h2,
        grad_u,
        f_l2,
        w24_constant,
        h3_constant,
    })
}

/// Sampled constants on one set of pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct H2bbReport {
    pub samples: usize,
    /// `(s, max over samples of C*(s))`.
    pub c_star: Vec<(f64, f64)>,
    pub h2_constant: f64,
    pub w24_constant: Option<f64>,
    pub h3_constant: Option<f64>,
    /// Every `C*(s)` is finite.
    pub all_finite: bool,
}

fn max_opt(it: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    it.flatten().fold(None, |a, v| Some(a.map_or(v, |a: f64| a.max(v))))
}

/// Sampled constants over the given pairs for every `s ∈ s_list ⊂ (2, 8]`.
/// `ws` supplies the grid and solver tolerances; each worker gets a copy.
pub fn h2bb_estimate_report(
    q_samples: &[ScalarField],
    f_samples: &[ScalarField],
    s_list: &[f64],
    spec: &MobilitySpec,
    ws: &EllipticWorkspace,
    extended: bool,
) -> Result<H2bbReport> {
    if q_samples.len() != f_samples.len() || q_samples.is_empty() {
        return Err(Error::InvalidParameter(
            "need equally many, and at least one, q and f samples".into(),
        ));
    }
    if s_list.iter().any(|&s| !(s > 2.0 && s <= 8.0)) {
        return Err(Error::InvalidParameter("every s must lie in (2, 8]".into()));
    }
    let norms: Vec<PairNorms> = q_samples
        .par_iter()
        .zip(f_samples)
        .map_init(|| ws.clone(), |w, (q, f)| pair_norms(q, f, spec, w, extended))
        .collect::<Result<_>>()?;
    let c_star: Vec<(f64, f64)> = s_list
        .iter()
        .map(|&s| (s, norms.iter().map(|n| n.c_star(s)).fold(0.0, f64::max)))
        .collect();
    Ok(H2bbReport {
        samples: norms.len(),
        all_finite: c_star.iter().all(|c| c.1.is_finite()),
        c_star,
        h2_constant: norms.iter().filter_map(|n| n.h2_constant()).fold(0.0, f64::max),
        w24_constant: max_opt(norms.iter().map(|n| n.w24_constant)),
        h3_constant: max_opt(norms.iter().map(|n| n.h3_constant)),
    })
}

/// Random `(q, f)` pairs on `grid`: `q` a band-limited field scaled so that
/// `|q| ≤ 0.9` independently of the grid, `f` a zero-mean band-limited field.
pub fn random_pairs(
    seed: u64,
    count: usize,
    band_limit: usize,
    grid: Grid,
) -> Result<(Vec<ScalarField>, Vec<ScalarField>)> {
    // Σ_{k,l} 1/(1+k²+l²) bounds the sup of a unit-amplitude series
    let envelope: f64 = (0..band_limit * band_limit)
        .map(|kl| 1.0 / (1.0 + ((kl % band_limit).pow(2) + (kl / band_limit).pow(2)) as f64))
        .sum();
    let qs = RandomFieldSpec {
        seed,
        band_limit,
        amplitude: 0.9 / envelope,
        zero_mean: false,
        purpose: purpose::H2BB,
    };
    let fs = RandomFieldSpec {
        amplitude: 1.0,
        zero_mean: true,
        ..qs
    };
    let q = (0..count as u64)
        .map(|i| qs.sample(grid, 2 * i))
        .collect::<Result<_>>()?;
    let f = (0..count as u64)
        .map(|i| fs.sample(grid, 2 * i + 1))
        .collect::<Result<_>>()?;
    Ok((q, f))
}

/// The same random pairs sampled on square grids of each size in `sizes`
/// (unit square), one report per grid.
pub fn h2bb_refinement_study(
    seed: u64,
    count: usize,
    band_limit: usize,
    sizes: &[usize],
    s_list: &[f64],
    spec: &MobilitySpec,
    extended: bool,
) -> Result<Vec<(usize, H2bbReport)>> {
    sizes
        .iter()
        .map(|&n| {
            let grid = make_grid(n, n, 1.0, 1.0)?;
            let (q, f) = random_pairs(seed, count, band_limit, grid)?;
            let ws = EllipticWorkspace::new(grid);
            Ok((n, h2bb_estimate_report(&q, &f, s_list, spec, &ws, extended)?))
        })
        .collect()
}

/// Largest ratio `C*(s)` on a grid over `C*(s)` on the next coarser grid,
/// over all `s`; values near or below one mean the constant stays bounded.
pub fn max_refinement_growth(study: &[(usize, H2bbReport)]) -> f64 {
    study
        .windows(2)
        .flat_map(|w| w[0].1.c_star.iter().zip(&w[1].1.c_star).map(|(a, b)| b.1 / a.1))
        .fold(0.0, f64::max)
}
