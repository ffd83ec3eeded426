//! Sampled Gagliardo–Nirenberg ratios
//! `‖f‖_{L^r} / (√r ‖f‖₂^{2/r} ‖f‖_{H¹}^{(r-2)/r})` across `r`.
//!
//! A bounded maximum ratio across `r` is consistent with the `√r` growth of
//! the constant; a systematic increase would indicate a missing factor.

use rayon::prelude::*;

use super::fields::{h1_dual_norm, h1_norm, lp_norm, RandomFieldSpec};
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::spectral::NeumannSpectral;

/// Largest admissible slope of `ln max-ratio` against `ln r`.
pub const GN_SLOPE_LIMIT: f64 = 0.05;

/// `‖f‖_{L^r} / (√r ‖f‖₂^{2/r} ‖f‖_{H¹}^{(r-2)/r})`; `None` for `f = 0`.
pub fn gn_ratio(f: &ScalarField, r: f64) -> Option<f64> {
    let l2 = f.norm_l2();
    if l2 == 0.0 {
        return None;
    }
    let h1 = h1_norm(f);
    Some(lp_norm(f, r) / (r.sqrt() * l2.powf(2.0 / r) * h1.powf((r - 2.0) / r)))
}

/// `‖f‖_{(H¹)'} / (√(r/(r-1)) ‖f‖_{L^{r'}})`, `r' = r/(r-1)`: the dual
/// embedding column.
pub fn dual_ratio(sp: &NeumannSpectral, f: &ScalarField, r: f64) -> Result<Option<f64>> {
    let rp = r / (r - 1.0);
    let denom = (r / (r - 1.0)).sqrt() * lp_norm(f, rp);
    if denom == 0.0 {
        return Ok(None);
    }
    Ok(Some(h1_dual_norm(sp, f)? / denom))
}

/// Statistics at one exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct GnRow {
    pub r: f64,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub max_dual_ratio: f64,
}

/// Result of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GnReport {
    pub samples: usize,
    pub rows: Vec<GnRow>,
    /// Least-squares slope of `ln max_ratio` against `ln r`.
    pub slope: f64,
    /// `slope ≤ GN_SLOPE_LIMIT`.
    pub no_growth: bool,
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Sample `count` fields from `spec` on `grid` and report ratio statistics
/// for every `r` in `r_list ⊂ [2, 64]`.
pub fn gn_inequality_sweep(spec: &RandomFieldSpec, r_list: &[f64], grid: Grid, count: usize) -> Result<GnReport> {
    spec.validate()?;
    if r_list.len() < 2 || r_list.iter().any(|&r| !(2.0..=64.0).contains(&r)) || count == 0 {
        return Err(Error::InvalidParameter(
            "GN sweep needs at least two r in [2, 64] and one sample".into(),
        ));
    }
    let sp = NeumannSpectral::new(grid);
    // per-sample ratios, one vector of (gn, dual) per field
    let per_sample: Vec<Vec<(f64, f64)>> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let f = spec.sample(grid, i)?;
            r_list
                .iter()
                .map(|&r| Ok((gn_ratio(&f, r).unwrap_or(0.0), dual_ratio(&sp, &f, r)?.unwrap_or(0.0))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<GnRow> = r_list
        .iter()
        .enumerate()
        .map(|(k, &r)| GnRow {
            r,
            max_ratio: per_sample.iter().map(|s| s[k].0).fold(0.0, f64::max),
            mean_ratio: per_sample.iter().map(|s| s[k].0).sum::<f64>() / count as f64,
            max_dual_ratio: per_sample.iter().map(|s| s[k].1).fold(0.0, f64::max),
        })
        .collect();
    let lx: Vec<f64> = rows.iter().map(|r| r.r.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.max_ratio.ln()).collect();
    let slope = ls_slope(&lx, &ly);
    Ok(GnReport {
        samples: count,
        rows,
        slope,
        no_growth: slope <= GN_SLOPE_LIMIT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::rng::purpose;

    #[test]
    fn constant_field_ratio_is_closed_form() {
        // |Ω| = 2: ‖c‖_r = |c| 2^{1/r}, ‖c‖₂ = ‖c‖_{H¹} = |c| √2
        let g = make_grid(8, 8, 2.0, 1.0).unwrap();
        let f = ScalarField::constant(g, 0.7);
        for r in [2.0, 4.0, 16.0] {
            let expected = 2f64.powf(1.0 / r) / (r.sqrt() * 2f64.sqrt());
            assert!((gn_ratio(&f, r).unwrap() - expected).abs() < 1e-14);
        }
        assert!(gn_ratio(&ScalarField::zeros(g), 4.0).is_none());
    }

    #[test]
    fn r_two_degenerates() {
        let g = make_grid(16, 16, 1.0, 1.0).unwrap();
        let spec = RandomFieldSpec {
            seed: 1,
            band_limit: 5,
            amplitude: 1.0,
            zero_mean: true,
            purpose: purpose::GN,
        };
        let f = spec.sample(g, 0).unwrap();
        assert!((gn_ratio(&f, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn ratio_is_scale_invariant() {
        let g = make_grid(16, 16, 1.0, 1.0).unwrap();
        let spec = RandomFieldSpec {
            seed: 2,
            band_limit: 6,
            amplitude: 1.0,
            zero_mean: false,
            purpose: purpose::GN,
        };
        let sp = NeumannSpectral::new(g);
        for i in 0..5 {
            let f = spec.sample(g, i).unwrap();
            for r in [2.0, 3.0, 8.0, 64.0] {
                let (a, b) = (gn_ratio(&f, r).unwrap(), gn_ratio(&f.scale(2.0), r).unwrap());
                assert!((a - b).abs() <= 1e-12 * a);
                let (a, b) = (
                    dual_ratio(&sp, &f, r).unwrap().unwrap(),
                    dual_ratio(&sp, &f.scale(2.0), r).unwrap().unwrap(),
                );
                assert!((a - b).abs() <= 1e-12 * a);
            }
        }
    }

    #[test]
    fn slope_of_a_line() {
        assert!((ls_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-15);
    }
}
