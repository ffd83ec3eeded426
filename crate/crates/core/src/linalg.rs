//! Preconditioned conjugate gradients on flat vectors.

use crate::grid::mean;

/// Which quantity terminates the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StopNorm {
    /// `‖r‖₂ / ‖b‖₂`
    Residual,
    /// `√(r·z) / √(b·P⁻¹b)`, the residual in the preconditioner's energy norm
    Preconditioned,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct PcgOutcome {
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(v: &mut [f64]) {
    let m = mean(v);
    v.iter_mut().for_each(|x| *x -= m);
}

/// Solve `A x = b` for SPD `A` starting from `x = 0`.
///
/// With `zero_mean` set, the iteration lives on the zero-mean subspace: the
/// right-hand side is assumed mean-free and every preconditioned residual is
/// projected, which suppresses drift along the constant null vector.
#[allow(clippy::too_many_arguments)]
pub(crate) fn pcg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    max_iter: usize,
    stop: StopNorm,
    zero_mean: bool,
) -> PcgOutcome {
    let n = b.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    if zero_mean {
        remove_mean(&mut z);
    }
    let mut rz = dot(&r, &z);
    let measure = |r: &[f64], rz: f64| match stop {
        StopNorm::Residual => dot(r, r).sqrt(),
        StopNorm::Preconditioned => rz.max(0.0).sqrt(),
    };
    let norm0 = measure(&r, rz);
    if norm0 == 0.0 {
        return PcgOutcome {
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rel = 1.0;
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return PcgOutcome {
                iterations: it,
                rel_residual: rel,
                converged: false,
            };
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        precond(&r, &mut z);
        if zero_mean {
            remove_mean(&mut z);
        }
        let rz_new = dot(&r, &z);
        rel = measure(&r, rz_new) / norm0;
        if rel <= rtol {
            return PcgOutcome {
                iterations: it,
                rel_residual: rel,
                converged: true,
            };
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    PcgOutcome {
        iterations: max_iter,
        rel_residual: rel,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        // tridiagonal SPD matrix
        let n = 20;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut v = 4.0 * x[i];
                if i > 0 {
                    v -= x[i - 1];
                }
                if i + 1 < n {
                    v -= x[i + 1];
                }
                y[i] = v;
            }
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; n];
        let out = pcg(
            apply,
            |r, z| z.copy_from_slice(r),
            &b,
            &mut x,
            1e-12,
            100,
            StopNorm::Residual,
            false,
        );
        assert!(out.converged);
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-11);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let b = vec![0.0; 5];
        let mut x = vec![1.0; 5];
        let out = pcg(
            |x, y| y.copy_from_slice(x),
            |r, z| z.copy_from_slice(r),
            &b,
            &mut x,
            1e-10,
            10,
            StopNorm::Preconditioned,
            false,
        );
        assert_eq!(out.iterations, 0);
        assert!(x.iter().all(|v| *v == 0.0));
    }
}
