//! Initial data.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::rng::{purpose, stream};

/// Mean `m` plus cellwise uniform noise in `[-amplitude, amplitude]`, with
/// the noise mean removed so that the field has mean exactly `m`.
pub fn noise(grid: Grid, m: f64, amplitude: f64, seed: u64) -> Result<ScalarField> {
    check_mean(m)?;
    let mut rng = stream(seed, purpose::INIT_NOISE);
    let v: Vec<f64> = (0..grid.len()).map(|_| amplitude * rng.gen_range(-1.0..=1.0)).collect();
    finish(grid, v, m)
}

/// Mean `m` plus a random cosine series over modes `1 ≤ k + l`, `k, l < modes`,
/// with coefficients damped like `1/(1 + k² + l²)` and rescaled so that the
/// perturbation has maximum `amplitude`.
pub fn band_limited(grid: Grid, m: f64, amplitude: f64, modes: usize, seed: u64) -> Result<ScalarField> {
    check_mean(m)?;
    if modes < 2 {
        return Err(Error::InvalidParameter(
            "band-limited data need at least two modes per axis".into(),
        ));
    }
    let mut rng = stream(seed, purpose::INIT_NOISE);
    let mut coeff = vec![0.0; modes * modes];
    for l in 0..modes {
        for k in 0..modes {
            if k + l > 0 {
                coeff[l * modes + k] = rng.gen_range(-1.0..=1.0) / (1.0 + (k * k + l * l) as f64);
            }
        }
    }
    let (lx, ly) = (grid.lx(), grid.ly());
    let pi = std::f64::consts::PI;
    let v = grid.sample(|x, y| {
        let mut s = 0.0;
        for l in 0..modes {
            let cy = (pi * l as f64 * y / ly).cos();
            for k in 0..modes {
                s += coeff[l * modes + k] * (pi * k as f64 * x / lx).cos() * cy;
            }
        }
        s
    });
    let peak = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let v = v.into_iter().map(|s| amplitude * s / peak).collect();
    finish(grid, v, m)
}

/// Single interface `amplitude·tanh((x - a)/width)` placed so that the mean is
/// `m`; requires `|m| < amplitude < 1`.
pub fn tanh_stripe(grid: Grid, m: f64, amplitude: f64, width: f64) -> Result<ScalarField> {
    check_mean(m)?;
    if !(amplitude > m.abs() && amplitude < 1.0 && width > 0.0) {
        return Err(Error::InvalidParameter(
            "tanh stripe needs |m| < amplitude < 1 and positive width".into(),
        ));
    }
    let a = 0.5 * grid.lx() * (1.0 + m / amplitude);
    let v = grid.sample(|x, _| -amplitude * ((x - a) / width).tanh());
    finish(grid, v, m)
}

/// `m + amplitude·cos(π k x/lx) cos(π k y/ly)`.
pub fn checkerboard(grid: Grid, m: f64, amplitude: f64, k: usize) -> Result<ScalarField> {
    check_mean(m)?;
    if k == 0 {
        return Err(Error::InvalidParameter(
            "checkerboard needs a positive mode number".into(),
        ));
    }
    let pi = std::f64::consts::PI;
    let (lx, ly) = (grid.lx(), grid.ly());
    let v = grid.sample(|x, y| amplitude * (pi * k as f64 * x / lx).cos() * (pi * k as f64 * y / ly).cos());
    finish(grid, v, m)
}

/// Zero-mean cellwise noise scaled to maximum modulus `eps`, drawn from the
/// perturbation stream of `seed`.
pub fn perturbation(grid: Grid, eps: f64, seed: u64) -> Result<ScalarField> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "perturbation size must be non-negative, got {eps}"
        )));
    }
    let mut rng = stream(seed, purpose::PERTURBATION);
    let v: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let p = ScalarField::new(grid, v)?.zero_mean();
    Ok(p.scale(eps / p.max_abs()))
}

fn check_mean(m: f64) -> Result<()> {
    if m.is_finite() && m.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("mean must lie in (-1, 1), got {m}")))
    }
}

/// `m + (v - mean v)`, rejecting values outside `(-1, 1)`.
fn finish(grid: Grid, mut v: Vec<f64>, m: f64) -> Result<ScalarField> {
    let vm = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|s| *s = m + (*s - vm));
    if let Some(s) = v.iter().find(|s| s.abs() >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "initial datum leaves (-1, 1) (value {s}); reduce the amplitude"
        )));
    }
    ScalarField::new(grid, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn means_are_exact() {
        let g = make_grid(32, 32, 1.0, 1.0).unwrap();
        for f in [
            noise(g, 0.1, 0.05, 3).unwrap(),
            band_limited(g, -0.2, 0.1, 4, 3).unwrap(),
            tanh_stripe(g, 0.3, 0.9, 0.05).unwrap(),
            checkerboard(g, 0.0, 0.5, 2).unwrap(),
        ] {
            assert!(f.mean().abs() < 1.0);
        }
        assert!((noise(g, 0.1, 0.05, 3).unwrap().mean() - 0.1).abs() < 1e-15);
        assert!((tanh_stripe(g, 0.3, 0.9, 0.05).unwrap().mean() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn seeds_reproduce() {
        let g = make_grid(16, 16, 1.0, 1.0).unwrap();
        assert_eq!(noise(g, 0.0, 0.1, 9).unwrap(), noise(g, 0.0, 0.1, 9).unwrap());
        assert_ne!(noise(g, 0.0, 0.1, 9).unwrap(), noise(g, 0.0, 0.1, 10).unwrap());
        let b = band_limited(g, 0.0, 0.1, 4, 9).unwrap();
        assert!((b.max_abs() - 0.1).abs() < 0.05);
    }

    #[test]
    fn rejects_bad_data() {
        let g = make_grid(16, 16, 1.0, 1.0).unwrap();
        assert!(noise(g, 1.0, 0.1, 1).is_err());
        assert!(noise(g, 0.95, 0.1, 1).is_err());
        assert!(tanh_stripe(g, 0.5, 0.4, 0.1).is_err());
        assert!(perturbation(g, -1.0, 1).is_err());
    }

    #[test]
    fn perturbation_is_scaled_and_centered() {
        let g = make_grid(16, 16, 1.0, 1.0).unwrap();
        let p = perturbation(g, 1e-4, 3).unwrap();
        assert!((p.max_abs() - 1e-4).abs() < 1e-18);
        assert!(p.mean().abs() < 1e-20);
    }
}
