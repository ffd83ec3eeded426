//! Cosine-transform diagonalization of the discrete Neumann Laplacian.
//!
//! The type-II DCT basis `cos(π k (i + 1/2) / n)` consists of eigenvectors of
//! the cell-centered Neumann second difference, with eigenvalue
//! `-(2/h²)(1 - cos(π k / n))`. Constant-coefficient problems built from `Δ_h`
//! are therefore solved exactly by transform, modewise scaling, and inverse
//! transform.

use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};

use crate::error::{Error, Result};
use crate::grid::{mean, Grid, ScalarField};

/// Planned transforms and Laplacian eigenvalues for one grid.
#[derive(Clone)]
pub struct NeumannSpectral {
    grid: Grid,
    plan_x: Arc<dyn TransformType2And3<f64>>,
    plan_y: Arc<dyn TransformType2And3<f64>>,
    kappa_x: Vec<f64>,
    kappa_y: Vec<f64>,
}

impl std::fmt::Debug for NeumannSpectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NeumannSpectral")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

/// `-λ_k = (2/h²)(1 - cos(π k / n))` for `k = 0..n`.
pub fn neumann_eigenvalues(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin();
            // 1 - cos(2a) = 2 sin²(a), free of cancellation for small k
            4.0 * s * s / (h * h)
        })
        .collect()
}

impl NeumannSpectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = DctPlanner::new();
        let plan_x = planner.plan_dct2(grid.nx());
        let plan_y = planner.plan_dct2(grid.ny());
        Self {
            kappa_x: neumann_eigenvalues(grid.nx(), grid.hx()),
            kappa_y: neumann_eigenvalues(grid.ny(), grid.hy()),
            grid,
            plan_x,
            plan_y,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Eigenvalue of `-Δ_h` for mode `(k, l)`.
    pub fn kappa(&self, k: usize, l: usize) -> f64 {
        self.kappa_x[k] + self.kappa_y[l]
    }

    /// Smallest positive eigenvalue of `-Δ_h`.
    pub fn kappa_min_positive(&self) -> f64 {
        self.kappa_x[1].min(self.kappa_y[1])
    }

    /// Unnormalized 2D DCT-II in place.
    pub(crate) fn forward(&self, data: &mut [f64]) {
        self.transform(data, false);
    }

    /// Exact inverse of [`forward`](Self::forward).
    pub(crate) fn inverse(&self, data: &mut [f64]) {
        self.transform(data, true);
        let s = 4.0 / (self.grid.nx() * self.grid.ny()) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    fn transform(&self, data: &mut [f64], inverse: bool) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        debug_assert_eq!(data.len(), nx * ny);
        let mut scratch = vec![0.0; self.plan_x.get_scratch_len().max(self.plan_y.get_scratch_len())];
        for row in data.chunks_exact_mut(nx) {
            if inverse {
                self.plan_x.process_dct3_with_scratch(row, &mut scratch);
            } else {
                self.plan_x.process_dct2_with_scratch(row, &mut scratch);
            }
        }
        let mut col = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = data[j * nx + i];
            }
            if inverse {
                self.plan_y.process_dct3_with_scratch(&mut col, &mut scratch);
            } else {
                self.plan_y.process_dct2_with_scratch(&mut col, &mut scratch);
            }
            for j in 0..ny {
                data[j * nx + i] = col[j];
            }
        }
    }

    /// `out = C⁻¹ diag(symbol(κ_kl)) C rhs`, the constant-coefficient operator
    /// with the given symbol in terms of the `-Δ_h` eigenvalue.
    pub(crate) fn apply_symbol(&self, rhs: &[f64], out: &mut [f64], symbol: impl Fn(f64) -> f64) {
        out.copy_from_slice(rhs);
        self.forward(out);
        let nx = self.grid.nx();
        for (l, ky) in self.kappa_y.iter().enumerate() {
            for (k, kx) in self.kappa_x.iter().enumerate() {
                out[l * nx + k] *= symbol(kx + ky);
            }
        }
        self.inverse(out);
    }

    /// Solve `(α I - β Δ_h) u = rhs`.
    ///
    /// With `α = 0` the zero-mean solution is returned and `rhs` must have
    /// zero mean.
    pub fn helmholtz_solve(&self, alpha: f64, beta: f64, rhs: &ScalarField) -> Result<ScalarField> {
        crate::grid::same_grid(&self.grid, rhs.grid())?;
        let mut out = vec![0.0; self.grid.len()];
        self.helmholtz_into(alpha, beta, rhs.values(), &mut out)?;
        Ok(ScalarField::from_vec(self.grid, out))
    }

    pub(crate) fn helmholtz_into(&self, alpha: f64, beta: f64, rhs: &[f64], out: &mut [f64]) -> Result<()> {
        if !(alpha.is_finite() && beta.is_finite()) || alpha < 0.0 || beta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Helmholtz coefficients must satisfy alpha >= 0, beta >= 0 (got {alpha}, {beta})"
            )));
        }
        if alpha == 0.0 && beta == 0.0 {
            return Err(Error::Singular("alpha = beta = 0".into()));
        }
        if alpha == 0.0 {
            let m = mean(rhs);
            let scale = rhs.iter().map(|v| v.abs()).sum::<f64>() / rhs.len() as f64;
            if m.abs() > 1e-10 * scale {
                return Err(Error::Singular(format!(
                    "pure Neumann problem needs a zero-mean right-hand side (mean {m:e})"
                )));
            }
        }
        self.apply_symbol(rhs, out, |kappa| {
            let d = alpha + beta * kappa;
            if d == 0.0 {
                0.0
            } else {
                1.0 / d
            }
        });
        Ok(())
    }
}

/// Fast solver for `(α I - β Δ_h) u = rhs` on the rhs grid.
pub fn dct_helmholtz_solve(alpha: f64, beta: f64, rhs: &ScalarField) -> Result<ScalarField> {
    NeumannSpectral::new(*rhs.grid()).helmholtz_solve(alpha, beta, rhs)
}
