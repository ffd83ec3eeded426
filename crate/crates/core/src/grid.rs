//! Cell-centered rectangular grid and Neumann-compatible discrete calculus.
//!
//! Cells are indexed `(i, j)` with `i` along x, stored row-major at `j * nx + i`.
//! Homogeneous Neumann conditions are imposed by ghost-cell reflection, which is
//! equivalent to zero flux through every boundary face. With this choice the
//! 5-point Laplacian is diagonalized by the type-II cosine transform.

use crate::error::{Error, Result};

/// Uniform rectangular grid on `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    hx: f64,
    hy: f64,
}

impl Grid {
    pub const MIN_CELLS: usize = 4;

    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < Self::MIN_CELLS || ny < Self::MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {} cells per axis, got {nx} x {ny}",
                Self::MIN_CELLS
            )));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "side lengths must be positive, got {lx} x {ly}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            hx: lx / nx as f64,
            hy: ly / ny as f64,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn hx(&self) -> f64 {
        self.hx
    }
    pub fn hy(&self) -> f64 {
        self.hy
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// |Ω|
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx, (j as f64 + 0.5) * self.hy)
    }

    /// Number of x-faces, `(nx + 1) * ny`.
    pub fn x_faces(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    /// Number of y-faces, `nx * (ny + 1)`.
    pub fn y_faces(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    /// Sample a function at cell centers.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (x, y) = self.cell_center(i, j);
                out.push(f(x, y));
            }
        }
        out
    }
}

/// Build a grid, rejecting non-positive or too-small dimensions.
pub fn make_grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid> {
    Grid::new(nx, ny, lx, ly)
}

/// A real field stored at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid has {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at cell {k}")));
        }
        Ok(Self { grid, values })
    }

    /// Construction without the finiteness scan, for values produced by the
    /// crate's own finite operators.
    pub(crate) fn from_vec(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.sample(f))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    /// Cell average, the discrete counterpart of `(1/|Ω|) ∫ f`.
    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// `∫ f g` by the midpoint rule.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        inner(&self.grid, &self.values, &other.values)
    }

    /// Discrete `L²(Ω)` norm.
    pub fn norm_l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        Self::from_vec(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &ScalarField) -> Result<ScalarField> {
        same_grid(&self.grid, &other.grid)?;
        Ok(Self::from_vec(
            self.grid,
            self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect(),
        ))
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, a: f64) -> ScalarField {
        self.map(|v| a * v)
    }

    /// Subtract the mean so that the result lies in the zero-mean subspace.
    pub fn zero_mean(&self) -> ScalarField {
        // second pass removes the rounding left by the first when the field
        // is a small fluctuation on a larger offset
        let m = self.mean();
        let once = self.map(|v| v - m);
        let m = once.mean();
        once.map(|v| v - m)
    }
}

/// Face-centered coefficients; boundary faces carry zero, encoding no flux.
///
/// x-face `(i, j)`, `0 <= i <= nx`, sits between cells `i - 1` and `i` and is
/// stored at `j * (nx + 1) + i`. y-face `(i, j)`, `0 <= j <= ny`, sits between
/// cells `j - 1` and `j` and is stored at `j * nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceCoeffs {
    grid: Grid,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl FaceCoeffs {
    pub fn new(grid: Grid, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != grid.x_faces() || y.len() != grid.y_faces() {
            return Err(Error::InvalidGrid("face array length mismatch".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "face coefficients must be finite and non-negative".into(),
            ));
        }
        let (nx, ny) = (grid.nx, grid.ny);
        for j in 0..ny {
            if x[j * (nx + 1)] != 0.0 || x[j * (nx + 1) + nx] != 0.0 {
                return Err(Error::InvalidParameter("boundary x-faces must be zero".into()));
            }
        }
        for i in 0..nx {
            if y[i] != 0.0 || y[ny * nx + i] != 0.0 {
                return Err(Error::InvalidParameter("boundary y-faces must be zero".into()));
            }
        }
        Ok(Self { grid, x, y })
    }

    /// All interior faces equal to `c`.
    pub fn constant(grid: Grid, c: f64) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let mut x = vec![c; grid.x_faces()];
        let mut y = vec![c; grid.y_faces()];
        for j in 0..ny {
            x[j * (nx + 1)] = 0.0;
            x[j * (nx + 1) + nx] = 0.0;
        }
        for i in 0..nx {
            y[i] = 0.0;
            y[ny * nx + i] = 0.0;
        }
        Self { grid, x, y }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Mean over interior faces.
    pub fn interior_mean(&self) -> f64 {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut s = 0.0;
        for j in 0..ny {
            for i in 1..nx {
                s += self.x[j * (nx + 1) + i];
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                s += self.y[j * nx + i];
            }
        }
        s / ((nx - 1) * ny + nx * (ny - 1)) as f64
    }

    /// Smallest and largest interior face value.
    pub fn interior_range(&self) -> (f64, f64) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..ny {
            for i in 1..nx {
                let v = self.x[j * (nx + 1) + i];
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                let v = self.y[j * nx + i];
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }
}

/// How a face value is formed from the two adjacent cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaceAverage {
    Arithmetic,
    #[default]
    Harmonic,
}

pub(crate) fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Midpoint-rule `∫ a b`.
pub(crate) fn inner(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    grid.cell_area() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// Discrete 5-point Neumann Laplacian into `out`.
pub(crate) fn laplacian_into(grid: &Grid, f: &[f64], out: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    let ihx2 = 1.0 / (grid.hx * grid.hx);
    let ihy2 = 1.0 / (grid.hy * grid.hy);
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let c = f[k];
            let mut fx = 0.0;
            if i + 1 < nx {
                fx += f[k + 1] - c;
            }
            if i > 0 {
                fx -= c - f[k - 1];
            }
            let mut fy = 0.0;
            if j + 1 < ny {
                fy += f[k + nx] - c;
            }
            if j > 0 {
                fy -= c - f[k - nx];
            }
            out[k] = fx * ihx2 + fy * ihy2;
        }
    }
}

/// `div_h(b ∇_h p)` into `out`; boundary faces carry no flux.
pub(crate) fn div_b_grad_into(faces: &FaceCoeffs, p: &[f64], out: &mut [f64]) {
    let grid = &faces.grid;
    let (nx, ny) = (grid.nx, grid.ny);
    let ihx2 = 1.0 / (grid.hx * grid.hx);
    let ihy2 = 1.0 / (grid.hy * grid.hy);
    let bx = &faces.x;
    let by = &faces.y;
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let c = p[k];
            let mut fx = 0.0;
            if i + 1 < nx {
                fx += bx[j * (nx + 1) + i + 1] * (p[k + 1] - c);
            }
            if i > 0 {
                fx -= bx[j * (nx + 1) + i] * (c - p[k - 1]);
            }
            let mut fy = 0.0;
            if j + 1 < ny {
                fy += by[(j + 1) * nx + i] * (p[k + nx] - c);
            }
            if j > 0 {
                fy -= by[j * nx + i] * (c - p[k - nx]);
            }
            out[k] = fx * ihx2 + fy * ihy2;
        }
    }
}

/// `‖∇_h f‖²` with face differences; satisfies `(-Δ_h f, f) = ‖∇_h f‖²` exactly.
pub(crate) fn grad_sq(grid: &Grid, f: &[f64]) -> f64 {
    weighted_grad_inner(None, grid, f, f)
}

/// `(b ∇_h f, ∇_h g)` on faces.
pub(crate) fn weighted_grad_inner(faces: Option<&FaceCoeffs>, grid: &Grid, f: &[f64], g: &[f64]) -> f64 {
    let (nx, ny) = (grid.nx, grid.ny);
    let ihx2 = 1.0 / (grid.hx * grid.hx);
    let ihy2 = 1.0 / (grid.hy * grid.hy);
    let mut sx = 0.0;
    for j in 0..ny {
        for i in 1..nx {
            let k = j * nx + i;
            let w = faces.map_or(1.0, |b| b.x[j * (nx + 1) + i]);
            sx += w * (f[k] - f[k - 1]) * (g[k] - g[k - 1]);
        }
    }
    let mut sy = 0.0;
    for j in 1..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let w = faces.map_or(1.0, |b| b.y[j * nx + i]);
            sy += w * (f[k] - f[k - nx]) * (g[k] - g[k - nx]);
        }
    }
    grid.cell_area() * (sx * ihx2 + sy * ihy2)
}

/// Discrete Neumann Laplacian `Δ_h f`.
pub fn laplacian_neumann(f: &ScalarField) -> Result<ScalarField> {
    check_finite(&f.values, "laplacian input")?;
    let mut out = vec![0.0; f.grid.len()];
    laplacian_into(&f.grid, &f.values, &mut out);
    Ok(ScalarField::from_vec(f.grid, out))
}

/// Conservative `div_h(b ∇_h p)` with face coefficients and zero boundary flux.
pub fn mobility_div_grad(b_face: &FaceCoeffs, p: &ScalarField) -> Result<ScalarField> {
    same_grid(&b_face.grid, &p.grid)?;
    check_finite(&p.values, "mobility_div_grad input")?;
    let mut out = vec![0.0; p.grid.len()];
    div_b_grad_into(b_face, &p.values, &mut out);
    Ok(ScalarField::from_vec(p.grid, out))
}

/// Face values from cell values. Boundary faces are zeroed.
pub fn face_average(b_cell: &ScalarField, mode: FaceAverage) -> Result<FaceCoeffs> {
    face_average_slice(&b_cell.grid, &b_cell.values, mode)
}

pub(crate) fn face_average_slice(grid: &Grid, b: &[f64], mode: FaceAverage) -> Result<FaceCoeffs> {
    check_finite(b, "cell mobility")?;
    match mode {
        FaceAverage::Harmonic => {
            if let Some(v) = b.iter().find(|v| **v <= 0.0) {
                return Err(Error::Domain {
                    value: *v,
                    domain: "(0, inf) for harmonic face averaging",
                });
            }
        }
        FaceAverage::Arithmetic => {
            if let Some(v) = b.iter().find(|v| **v < 0.0) {
                return Err(Error::Domain {
                    value: *v,
                    domain: "[0, inf) for face averaging",
                });
            }
        }
    }
    let avg = |a: f64, c: f64| match mode {
        FaceAverage::Arithmetic => 0.5 * (a + c),
        FaceAverage::Harmonic => 2.0 * a * c / (a + c),
    };
    let (nx, ny) = (grid.nx, grid.ny);
    let mut x = vec![0.0; grid.x_faces()];
    let mut y = vec![0.0; grid.y_faces()];
    for j in 0..ny {
        for i in 1..nx {
            let k = j * nx + i;
            x[j * (nx + 1) + i] = avg(b[k - 1], b[k]);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let k = j * nx + i;
            y[j * nx + i] = avg(b[k - nx], b[k]);
        }
    }
    Ok(FaceCoeffs { grid: *grid, x, y })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_field(grid: Grid, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..grid.len())
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    /// Dense Neumann Laplacian assembled entry by entry.
    fn dense_laplacian(grid: &Grid) -> Vec<Vec<f64>> {
        let n = grid.len();
        let mut a = vec![vec![0.0; n]; n];
        let (nx, ny) = (grid.nx(), grid.ny());
        for j in 0..ny {
            for i in 0..nx {
                let k = grid.idx(i, j);
                let mut link = |kk: usize, w: f64| {
                    a[k][kk] += w;
                    a[k][k] -= w;
                };
                if i > 0 {
                    link(grid.idx(i - 1, j), 1.0 / grid.hx().powi(2));
                }
                if i + 1 < nx {
                    link(grid.idx(i + 1, j), 1.0 / grid.hx().powi(2));
                }
                if j > 0 {
                    link(grid.idx(i, j - 1), 1.0 / grid.hy().powi(2));
                }
                if j + 1 < ny {
                    link(grid.idx(i, j + 1), 1.0 / grid.hy().powi(2));
                }
            }
        }
        a
    }

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
            .collect()
    }

    #[test]
    fn make_grid_examples() {
        let g = make_grid(64, 64, 1.0, 1.0).unwrap();
        assert_eq!(g.hx(), 1.0 / 64.0);
        assert_eq!(g.hy(), 1.0 / 64.0);
        let g = make_grid(4, 8, 2.0, 1.0).unwrap();
        assert_eq!(g.hx(), 0.5);
        assert_eq!(g.hy(), 0.125);
        assert!(make_grid(2, 64, 1.0, 1.0).is_err());
        assert!(make_grid(8, 8, 0.0, 1.0).is_err());
        assert!(make_grid(8, 8, 1.0, -1.0).is_err());
    }

    #[test]
    fn cell_centers_are_offset_by_half() {
        let g = make_grid(4, 5, 2.0, 1.0).unwrap();
        assert_eq!(g.cell_center(0, 0), (0.25, 0.1));
        assert_eq!(g.idx(3, 2), 11);
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = make_grid(8, 6, 1.0, 2.0).unwrap();
        let f = ScalarField::constant(g, 3.7);
        let lap = laplacian_neumann(&f).unwrap();
        assert!(lap.max_abs() == 0.0);
    }

    #[test]
    fn cosine_mode_is_an_eigenvector() {
        let g = make_grid(8, 8, 1.0, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x, _| (std::f64::consts::PI * x).cos()).unwrap();
        let lam = -(2.0 / g.hx().powi(2)) * (1.0 - (std::f64::consts::PI * g.hx()).cos());
        // independent check through the dense operator
        let dense = matvec(&dense_laplacian(&g), f.values());
        let lap = laplacian_neumann(&f).unwrap();
        for ((d, l), v) in dense.iter().zip(lap.values()).zip(f.values()) {
            assert!((d - lam * v).abs() < 1e-12);
            assert!((l - lam * v).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_matches_dense_assembly() {
        let g = make_grid(8, 8, 1.3, 0.7).unwrap();
        let f = ScalarField::new(g, lcg_field(g, 3)).unwrap();
        let dense = matvec(&dense_laplacian(&g), f.values());
        let lap = laplacian_neumann(&f).unwrap();
        let scale = dense.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in dense.iter().zip(lap.values()) {
            assert!((a - b).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn laplacian_sums_to_zero() {
        let g = make_grid(16, 12, 1.0, 1.0).unwrap();
        let f = ScalarField::new(g, lcg_field(g, 9)).unwrap();
        let lap = laplacian_neumann(&f).unwrap();
        let s: f64 = lap.values().iter().sum();
        let n: f64 = lap.values().iter().map(|v| v.abs()).sum();
        assert!(s.abs() <= 1e-13 * n);
    }

    #[test]
    fn summation_by_parts_is_exact() {
        let g = make_grid(10, 7, 1.0, 0.5).unwrap();
        let f = ScalarField::new(g, lcg_field(g, 5)).unwrap();
        let lap = laplacian_neumann(&f).unwrap();
        let lhs = -lap.inner(&f);
        let rhs = grad_sq(&g, f.values());
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn unit_mobility_reduces_to_laplacian() {
        let g = make_grid(9, 11, 1.0, 1.0).unwrap();
        let p = ScalarField::new(g, lcg_field(g, 1)).unwrap();
        let b = FaceCoeffs::constant(g, 1.0);
        let a = mobility_div_grad(&b, &p).unwrap();
        let l = laplacian_neumann(&p).unwrap();
        for (x, y) in a.values().iter().zip(l.values()) {
            assert!((x - y).abs() <= 1e-14 * x.abs().max(1.0));
        }
    }

    #[test]
    fn mobility_operator_matches_dense_assembly() {
        let g = make_grid(8, 8, 1.0, 1.0).unwrap();
        let bc: Vec<f64> = lcg_field(g, 11).iter().map(|v| 1.0 + 0.5 * v).collect();
        let faces = face_average_slice(&g, &bc, FaceAverage::Harmonic).unwrap();
        let p = ScalarField::new(g, lcg_field(g, 12)).unwrap();
        let n = g.len();
        let mut a = vec![vec![0.0; n]; n];
        let (nx, ny) = (g.nx(), g.ny());
        for j in 0..ny {
            for i in 0..nx {
                let k = g.idx(i, j);
                if i + 1 < nx {
                    let w = faces.x()[j * (nx + 1) + i + 1] / g.hx().powi(2);
                    let kk = g.idx(i + 1, j);
                    a[k][kk] += w;
                    a[k][k] -= w;
                    a[kk][k] += w;
                    a[kk][kk] -= w;
                }
                if j + 1 < ny {
                    let w = faces.y()[(j + 1) * nx + i] / g.hy().powi(2);
                    let kk = g.idx(i, j + 1);
                    a[k][kk] += w;
                    a[k][k] -= w;
                    a[kk][k] += w;
                    a[kk][kk] -= w;
                }
            }
        }
        let dense = matvec(&a, p.values());
        let out = mobility_div_grad(&faces, &p).unwrap();
        let scale = dense.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in dense.iter().zip(out.values()) {
            assert!((x - y).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn face_average_examples() {
        let g = make_grid(4, 4, 1.0, 1.0).unwrap();
        let c = ScalarField::constant(g, 2.5);
        for mode in [FaceAverage::Harmonic, FaceAverage::Arithmetic] {
            let f = face_average(&c, mode).unwrap();
            assert_eq!(f.interior_range(), (2.5, 2.5));
        }
        let mut v = vec![1.0; 16];
        v[1] = 3.0;
        let cells = ScalarField::new(g, v).unwrap();
        let h = face_average(&cells, FaceAverage::Harmonic).unwrap();
        let a = face_average(&cells, FaceAverage::Arithmetic).unwrap();
        // face between cell (0,0) and (1,0)
        assert_eq!(h.x()[1], 1.5);
        assert_eq!(a.x()[1], 2.0);
        assert_eq!(h.x()[0], 0.0);
        assert_eq!(h.x()[4], 0.0);
        let bad = ScalarField::new(g, vec![0.0; 16]).unwrap();
        assert!(face_average(&bad, FaceAverage::Harmonic).is_err());
        assert!(face_average(&bad, FaceAverage::Arithmetic).is_ok());
    }

    #[test]
    fn face_coeffs_reject_boundary_flux() {
        let g = make_grid(4, 4, 1.0, 1.0).unwrap();
        let ok = FaceCoeffs::constant(g, 1.0);
        assert!(FaceCoeffs::new(g, ok.x().to_vec(), ok.y().to_vec()).is_ok());
        let mut x = ok.x().to_vec();
        x[0] = 1.0;
        assert!(FaceCoeffs::new(g, x, ok.y().to_vec()).is_err());
    }

    #[test]
    fn nonfinite_fields_are_rejected() {
        let g = make_grid(4, 4, 1.0, 1.0).unwrap();
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(ScalarField::new(g, v).is_err());
        assert!(ScalarField::new(g, vec![0.0; 15]).is_err());
    }
}
