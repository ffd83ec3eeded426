//! Random test fields and discrete Sobolev-type norms.
//!
//! All norms use the cell-area quadrature weight `hx·hy` and one-sided
//! differences on the staggered locations where they are naturally defined:
//! first differences on interior faces, pure second differences at cells (the
//! two parts of the Neumann Laplacian), mixed differences at interior
//! vertices, and third differences one staggering further out.
//!
//! `‖f‖²_{H²} = ‖f‖² + ‖∇_h f‖² + ‖Δ_h f‖² + ‖D_xy f‖²` is the discrete `H²`
//! norm used throughout.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{grad_sq, laplacian_into, Grid, ScalarField};
use crate::rng::sample_stream;
use crate::spectral::NeumannSpectral;

/// Generator of random cosine series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomFieldSpec {
    pub seed: u64,
    /// Modes `0 ≤ k, l < band_limit` per axis.
    pub band_limit: usize,
    /// Envelope: mode `(k, l)` has a coefficient uniform in
    /// `±amplitude/(1 + k² + l²)`.
    pub amplitude: f64,
    /// Drop the constant mode.
    pub zero_mean: bool,
    /// Stream purpose id, so that different suites draw different fields.
    pub purpose: u64,
}

impl RandomFieldSpec {
    pub fn validate(&self) -> Result<()> {
        if self.band_limit == 0 || !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidParameter(
                "random fields need a positive band limit and amplitude".into(),
            ));
        }
        Ok(())
    }

    /// Field number `index`; deterministic in `(seed, purpose, index)`.
    pub fn sample(&self, grid: Grid, index: u64) -> Result<ScalarField> {
        self.validate()?;
        let mut rng = sample_stream(self.seed, self.purpose, index);
        let n = self.band_limit;
        let coeff: Vec<f64> = (0..n * n)
            .map(|kl| {
                let (k, l) = (kl % n, kl / n);
                let c = self.amplitude * rng.gen_range(-1.0..=1.0) / (1.0 + (k * k + l * l) as f64);
                if kl == 0 && self.zero_mean {
                    0.0
                } else {
                    c
                }
            })
            .collect();
        let pi = std::f64::consts::PI;
        let (lx, ly) = (grid.lx(), grid.ly());
        let cx: Vec<Vec<f64>> = (0..grid.nx())
            .map(|i| {
                let x = grid.cell_center(i, 0).0;
                (0..n).map(|k| (pi * k as f64 * x / lx).cos()).collect()
            })
            .collect();
        let cy: Vec<Vec<f64>> = (0..grid.ny())
            .map(|j| {
                let y = grid.cell_center(0, j).1;
                (0..n).map(|l| (pi * l as f64 * y / ly).cos()).collect()
            })
            .collect();
        let mut v = vec![0.0; grid.len()];
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let mut s = 0.0;
                for l in 0..n {
                    for k in 0..n {
                        s += coeff[l * n + k] * cx[i][k] * cy[j][l];
                    }
                }
                v[grid.idx(i, j)] = s;
            }
        }
        ScalarField::new(grid, v)
    }
}

/// Values on an `nx × ny` staggered array, row-major.
struct Stag {
    nx: usize,
    ny: usize,
    v: Vec<f64>,
}

impl Stag {
    fn cells(grid: &Grid, f: &[f64]) -> Self {
        Stag {
            nx: grid.nx(),
            ny: grid.ny(),
            v: f.to_vec(),
        }
    }

    /// Forward difference in x, dropping the last column.
    fn dx(&self, h: f64) -> Self {
        let nx = self.nx - 1;
        let v = (0..self.ny)
            .flat_map(|j| (0..nx).map(move |i| (j, i)))
            .map(|(j, i)| (self.v[j * self.nx + i + 1] - self.v[j * self.nx + i]) / h)
            .collect();
        Stag { nx, ny: self.ny, v }
    }

    /// Forward difference in y, dropping the last row.
    fn dy(&self, h: f64) -> Self {
        let ny = self.ny - 1;
        let v = (0..ny)
            .flat_map(|j| (0..self.nx).map(move |i| (j, i)))
            .map(|(j, i)| (self.v[(j + 1) * self.nx + i] - self.v[j * self.nx + i]) / h)
            .collect();
        Stag { nx: self.nx, ny, v }
    }

    fn sum_pow(&self, p: i32, w: f64) -> f64 {
        w * self.v.iter().map(|x| x.abs().powi(p)).sum::<f64>()
    }
}

/// Neumann second difference in x (or y) at cells: the x (or y) part of `Δ_h`.
fn second_diff(grid: &Grid, f: &[f64], along_x: bool) -> Stag {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut v = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            v[k] = if along_x {
                let l = if i > 0 { f[k - 1] } else { f[k] };
                let r = if i + 1 < nx { f[k + 1] } else { f[k] };
                (l - 2.0 * f[k] + r) / (grid.hx() * grid.hx())
            } else {
                let d = if j > 0 { f[k - nx] } else { f[k] };
                let u = if j + 1 < ny { f[k + nx] } else { f[k] };
                (d - 2.0 * f[k] + u) / (grid.hy() * grid.hy())
            };
        }
    }
    Stag { nx, ny, v }
}

/// `‖f‖_{L^r}` for `r ≥ 1`, evaluated with a max-scaling to avoid overflow.
pub fn lp_norm(f: &ScalarField, r: f64) -> f64 {
    let m = f.max_abs();
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = f.values().iter().map(|v| (v.abs() / m).powf(r)).sum();
    m * (s * f.grid().cell_area()).powf(1.0 / r)
}

/// `‖∇_h f‖` on interior faces.
pub fn grad_norm(f: &ScalarField) -> f64 {
    grad_sq(f.grid(), f.values()).sqrt()
}

/// `(‖f‖² + ‖∇_h f‖²)^{1/2}`.
pub fn h1_norm(f: &ScalarField) -> f64 {
    (f.norm_l2().powi(2) + grad_sq(f.grid(), f.values())).sqrt()
}

/// `‖Δ_h f‖`.
pub fn laplacian_norm(f: &ScalarField) -> f64 {
    let g = f.grid();
    let mut lap = vec![0.0; g.len()];
    laplacian_into(g, f.values(), &mut lap);
    (g.cell_area() * lap.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// `‖D_xy f‖` at interior vertices.
pub fn mixed_norm(f: &ScalarField) -> f64 {
    let g = f.grid();
    Stag::cells(g, f.values())
        .dx(g.hx())
        .dy(g.hy())
        .sum_pow(2, g.cell_area())
        .sqrt()
}

/// Discrete `H²` norm.
pub fn h2_norm(f: &ScalarField) -> f64 {
    (h1_norm(f).powi(2) + laplacian_norm(f).powi(2) + mixed_norm(f).powi(2)).sqrt()
}

/// Discrete `W^{2,4}` norm: `(Σ ‖D^α f‖⁴_{L⁴})^{1/4}` over
/// `α ∈ {0, x, y, xx, yy, xy}`.
pub fn w24_norm(f: &ScalarField) -> f64 {
    let g = f.grid();
    let (w, hx, hy) = (g.cell_area(), g.hx(), g.hy());
    let c = Stag::cells(g, f.values());
    let dx = c.dx(hx);
    let s = c.sum_pow(4, w)
        + dx.sum_pow(4, w)
        + c.dy(hy).sum_pow(4, w)
        + second_diff(g, f.values(), true).sum_pow(4, w)
        + second_diff(g, f.values(), false).sum_pow(4, w)
        + dx.dy(hy).sum_pow(4, w);
    s.powf(0.25)
}

/// Discrete `H³` norm: the `H²` norm plus the four third differences
/// `D_xxx, D_xxy, D_xyy, D_yyy`.
pub fn h3_norm(f: &ScalarField) -> f64 {
    let g = f.grid();
    let (w, hx, hy) = (g.cell_area(), g.hx(), g.hy());
    let dxx = second_diff(g, f.values(), true);
    let dyy = second_diff(g, f.values(), false);
    let third =
        dxx.dx(hx).sum_pow(2, w) + dxx.dy(hy).sum_pow(2, w) + dyy.dx(hx).sum_pow(2, w) + dyy.dy(hy).sum_pow(2, w);
    (h2_norm(f).powi(2) + third).sqrt()
}

/// `‖f‖_{(H¹)'} = (f, (I - Δ_h)⁻¹ f)^{1/2}`.
pub fn h1_dual_norm(sp: &NeumannSpectral, f: &ScalarField) -> Result<f64> {
    let u = sp.helmholtz_solve(1.0, 1.0, f)?;
    Ok(f.inner(&u).max(0.0).sqrt())
}
