//! Fixed-step RK4 over piecewise-constant coefficients, with step doubling.

/// Trajectory sampled on a uniform grid of each piece.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    /// Steps per piece of the accepted resolution.
    pub steps_per_piece: usize,
    /// Largest difference to the half-resolution solution at shared points,
    /// measured by the caller-supplied metric.
    pub consistency: f64,
    /// Whether the consistency target was met before the step cap.
    pub consistent: bool,
}

/// RK4 over pieces `[breaks[i], breaks[i+1]]`; `rhs(i, t, y)` is smooth on
/// each piece. Returns `None` if the solution becomes non-finite.
pub fn rk4_pieces(
    breaks: &[f64],
    y0: f64,
    steps_per_piece: usize,
    rhs: &impl Fn(usize, f64, f64) -> f64,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut t = vec![breaks[0]];
    let mut y = vec![y0];
    let mut yc = y0;
    for piece in 0..breaks.len() - 1 {
        let (a, b) = (breaks[piece], breaks[piece + 1]);
        let h = (b - a) / steps_per_piece as f64;
        for s in 0..steps_per_piece {
            let tc = a + s as f64 * h;
            let k1 = rhs(piece, tc, yc);
            let k2 = rhs(piece, tc + 0.5 * h, yc + 0.5 * h * k1);
            let k3 = rhs(piece, tc + 0.5 * h, yc + 0.5 * h * k2);
            let k4 = rhs(piece, tc + h, yc + h * k3);
            yc += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !yc.is_finite() {
                return None;
            }
            t.push(if s + 1 == steps_per_piece { b } else { tc + h });
            y.push(yc);
        }
    }
    Some((t, y))
}

/// Double the resolution until two successive solutions agree to `tol` under
/// `metric(coarse, fine)` at the coarse points.
pub fn rk4_self_consistent(
    breaks: &[f64],
    y0: f64,
    rhs: &impl Fn(usize, f64, f64) -> f64,
    metric: impl Fn(f64, f64) -> f64,
    tol: f64,
    start_steps: usize,
    max_steps: usize,
) -> Option<Trajectory> {
    let mut n = start_steps.max(1);
    let mut coarse = rk4_pieces(breaks, y0, n, rhs)?;
    loop {
        let fine = rk4_pieces(breaks, y0, 2 * n, rhs)?;
        let diff = coarse
            .1
            .iter()
            .enumerate()
            .map(|(k, &yc)| metric(yc, fine.1[2 * k]))
            .fold(0.0, f64::max);
        n *= 2;
        if diff <= tol || n >= max_steps {
            return Some(Trajectory {
                t: fine.0,
                y: fine.1,
                steps_per_piece: n,
                consistency: diff,
                consistent: diff <= tol,
            });
        }
        coarse = fine;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_is_reproduced() {
        let breaks = [0.0, 0.5, 1.0];
        let tr = rk4_self_consistent(
            &breaks,
            1.0,
            &|_, _, y| y,
            |a, b| ((a - b) / b).abs(),
            1e-10,
            4,
            1 << 16,
        )
        .unwrap();
        assert!(tr.consistent);
        assert!((tr.y.last().unwrap() - 1f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn piecewise_coefficients() {
        // y' = c_i y with c = (1, -1) on two unit pieces returns to y0
        let breaks = [0.0, 1.0, 2.0];
        let c = [1.0, -1.0];
        let tr = rk4_self_consistent(
            &breaks,
            2.0,
            &|i, _, y| c[i] * y,
            |a, b| (a - b).abs(),
            1e-12,
            4,
            1 << 16,
        )
        .unwrap();
        assert!((tr.y.last().unwrap() - 2.0).abs() < 1e-10);
        assert_eq!(tr.t.len(), tr.y.len());
        assert_eq!(*tr.t.last().unwrap(), 2.0);
    }
}
