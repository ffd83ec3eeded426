//! Flory–Huggins potential, mobility families and free-energy functionals.
//!
//! The potential splits as `Ψ(s) = F(s) - (Θ0/2) s²` with
//! `F(s) = (Θ/2)[(1+s)ln(1+s) + (1-s)ln(1-s)]` convex, `F'' >= Θ`.

use crate::error::{Error, Result};
use crate::grid::{face_average_slice, grad_sq, FaceAverage, FaceCoeffs, Grid, ScalarField};

/// Distance from ±1 at which field values are clamped before evaluating the
/// logarithmic terms.
pub const EPS_CLAMP: f64 = 1e-13;

/// Lower bound applied to face mobilities of the degenerate family.
pub const DEGENERATE_FLOOR: f64 = 1e-12;

/// Number of sample points used to verify declared mobility bounds.
pub const MOBILITY_SWEEP: usize = 10_001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    theta: f64,
    theta0: f64,
}

impl PotentialParams {
    /// Requires `Θ > 0`, `Θ0 > 0` and `Θ0 > Θ`.
    pub fn new(theta: f64, theta0: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
        }
        if !(theta0.is_finite() && theta0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "theta0 must be positive, got {theta0}"
            )));
        }
        if theta0 <= theta {
            return Err(Error::InvalidParameter("theta0 must exceed theta".into()));
        }
        Ok(Self { theta, theta0 })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    // Unchecked kernels; callers guarantee |s| < 1.

    #[inline]
    pub(crate) fn f_raw(&self, s: f64) -> f64 {
        0.5 * self.theta * ((1.0 + s) * s.ln_1p() + (1.0 - s) * (-s).ln_1p())
    }

    #[inline]
    pub(crate) fn f_prime_raw(&self, s: f64) -> f64 {
        // odd-symmetric artanh; the std routine loses accuracy for s → -1
        let a = s.abs();
        self.theta * (0.5 * (2.0 * a / (1.0 - a)).ln_1p()).copysign(s)
    }

    #[inline]
    pub(crate) fn f_second_raw(&self, s: f64) -> f64 {
        self.theta / ((1.0 - s) * (1.0 + s))
    }

    #[inline]
    pub(crate) fn psi_raw(&self, s: f64) -> f64 {
        self.f_raw(s) - 0.5 * self.theta0 * s * s
    }

    #[inline]
    pub(crate) fn psi_prime_raw(&self, s: f64) -> f64 {
        self.f_prime_raw(s) - self.theta0 * s
    }
}

fn open_interval(s: f64) -> Result<f64> {
    if s.is_finite() && s.abs() < 1.0 {
        Ok(s)
    } else {
        Err(Error::Domain {
            value: s,
            domain: "(-1, 1)",
        })
    }
}

/// Clamp into `[-1 + EPS_CLAMP, 1 - EPS_CLAMP]`; the flag reports whether
/// clamping was needed.
pub fn clamp_to_domain(s: f64) -> (f64, bool) {
    let lim = 1.0 - EPS_CLAMP;
    if s > lim {
        (lim, true)
    } else if s < -lim {
        (-lim, true)
    } else {
        (s, false)
    }
}

/// Ψ(s)
pub fn psi(s: f64, p: &PotentialParams) -> Result<f64> {
    open_interval(s).map(|s| p.psi_raw(s))
}

/// Ψ'(s) = (Θ/2) ln((1+s)/(1-s)) - Θ0 s
pub fn psi_prime(s: f64, p: &PotentialParams) -> Result<f64> {
    open_interval(s).map(|s| p.psi_prime_raw(s))
}

/// Ψ''(s) = F''(s) - Θ0
pub fn psi_second(s: f64, p: &PotentialParams) -> Result<f64> {
    open_interval(s).map(|s| p.f_second_raw(s) - p.theta0)
}

/// Convex part F(s).
pub fn f_convex(s: f64, p: &PotentialParams) -> Result<f64> {
    open_interval(s).map(|s| p.f_raw(s))
}

/// F'(s) = Θ artanh(s)
pub fn f_prime(s: f64, p: &PotentialParams) -> Result<f64> {
    open_interval(s).map(|s| p.f_prime_raw(s))
}

/// F''(s) = Θ / (1 - s²)
pub fn f_second(s: f64, p: &PotentialParams) -> Result<f64> {
    open_interval(s).map(|s| p.f_second_raw(s))
}

/// Count of cells that needed clamping.
pub fn out_of_domain_count(phi: &ScalarField) -> usize {
    phi.values().iter().filter(|v| clamp_to_domain(**v).1).count()
}

/// Ψ'(φ) cellwise with clamping.
pub fn psi_prime_field(phi: &ScalarField, p: &PotentialParams) -> ScalarField {
    phi.map(|v| p.psi_prime_raw(clamp_to_domain(v).0))
}

/// Ginzburg–Landau energy `E(φ) = ∫ ½|∇φ|² + Ψ(φ)`.
pub fn energy(phi: &ScalarField, p: &PotentialParams) -> Result<f64> {
    functional(phi, |s| p.psi_raw(s))
}

/// Convex energy `E_0(φ) = ½‖∇φ‖² + ∫ F(φ)`.
pub fn energy_convex(phi: &ScalarField, p: &PotentialParams) -> Result<f64> {
    functional(phi, |s| p.f_raw(s))
}

pub(crate) fn energy_slice(grid: &Grid, phi: &[f64], p: &PotentialParams) -> f64 {
    let bulk: f64 = phi.iter().map(|&v| p.psi_raw(clamp_to_domain(v).0)).sum();
    0.5 * grad_sq(grid, phi) + grid.cell_area() * bulk
}

fn functional(phi: &ScalarField, density: impl Fn(f64) -> f64) -> Result<f64> {
    let grid = phi.grid();
    let bulk: f64 = phi.values().iter().map(|&v| density(clamp_to_domain(v).0)).sum();
    let e = 0.5 * grad_sq(grid, phi.values()) + grid.cell_area() * bulk;
    if e.is_finite() {
        Ok(e)
    } else {
        Err(Error::NonFinite("energy".into()))
    }
}

/// The three mobility families.
#[derive(Debug, Clone, PartialEq)]
pub enum MobilityForm {
    /// `b ≡ m0`
    Constant { m0: f64 },
    /// `b(s) = Σ c_k s^k`, non-degenerate on `[-1, 1]`
    Polynomial { coeffs: Vec<f64> },
    /// `b(s) = m0 (1 - s²)`
    Degenerate { m0: f64 },
}

/// Mobility together with its declared bounds on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilitySpec {
    form: MobilityForm,
    b_min: f64,
    b_max: f64,
}

fn horner(coeffs: &[f64], s: f64) -> (f64, f64, f64) {
    let mut b = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for &c in coeffs.iter().rev() {
        d2 = d2 * s + 2.0 * d1;
        d1 = d1 * s + b;
        b = b * s + c;
    }
    (b, d1, d2)
}

fn sweep(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| -1.0 + 2.0 * k as f64 / (n - 1) as f64)
}

impl MobilitySpec {
    pub fn constant(m0: f64) -> Result<Self> {
        if !(m0.is_finite() && m0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "constant mobility must be positive, got {m0}"
            )));
        }
        Ok(Self {
            form: MobilityForm::Constant { m0 },
            b_min: m0,
            b_max: m0,
        })
    }

    /// Polynomial mobility with declared bounds, verified on a dense sweep
    /// of `[-1, 1]`.
    pub fn polynomial(coeffs: Vec<f64>, b_min: f64, b_max: f64) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "polynomial mobility needs finite coefficients".into(),
            ));
        }
        if !(b_min > 0.0 && b_min <= b_max && b_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "declared mobility bounds must satisfy 0 < b_min <= b_max, got ({b_min}, {b_max})"
            )));
        }
        let slack = 1e-12 * b_max;
        for s in sweep(MOBILITY_SWEEP) {
            let b = horner(&coeffs, s).0;
            if b < b_min - slack || b > b_max + slack {
                return Err(Error::InvalidParameter(format!(
                    "mobility b({s}) = {b} violates declared bounds [{b_min}, {b_max}]"
                )));
            }
        }
        Ok(Self {
            form: MobilityForm::Polynomial { coeffs },
            b_min,
            b_max,
        })
    }

    /// Polynomial mobility with bounds taken from the dense sweep.
    pub fn polynomial_sampled(coeffs: Vec<f64>) -> Result<Self> {
        let (lo, hi) = sweep(MOBILITY_SWEEP).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            let b = horner(&coeffs, s).0;
            (lo.min(b), hi.max(b))
        });
        if !(lo > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "polynomial mobility is not positive on [-1, 1] (min {lo})"
            )));
        }
        Self::polynomial(coeffs, lo, hi)
    }

    pub fn degenerate(m0: f64) -> Result<Self> {
        if !(m0.is_finite() && m0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "degenerate mobility scale must be positive, got {m0}"
            )));
        }
        Ok(Self {
            form: MobilityForm::Degenerate { m0 },
            b_min: 0.0,
            b_max: m0,
        })
    }

    pub fn form(&self) -> &MobilityForm {
        &self.form
    }

    pub fn b_min(&self) -> f64 {
        self.b_min
    }

    pub fn b_max(&self) -> f64 {
        self.b_max
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.form, MobilityForm::Degenerate { .. })
    }

    /// `(b, b', b'')` at `s ∈ [-1, 1]`.
    pub fn eval(&self, s: f64) -> Result<(f64, f64, f64)> {
        if !(s.is_finite() && s.abs() <= 1.0) {
            return Err(Error::Domain {
                value: s,
                domain: "[-1, 1]",
            });
        }
        Ok(self.eval_raw(s))
    }

    #[inline]
    fn eval_raw(&self, s: f64) -> (f64, f64, f64) {
        match &self.form {
            MobilityForm::Constant { m0 } => (*m0, 0.0, 0.0),
            MobilityForm::Polynomial { coeffs } => horner(coeffs, s),
            MobilityForm::Degenerate { m0 } => (m0 * (1.0 - s * s), -2.0 * m0 * s, -2.0 * m0),
        }
    }

    /// `b(s)` with `s` clamped into `[-1, 1]`.
    #[inline]
    pub(crate) fn b(&self, s: f64) -> f64 {
        self.eval_raw(s.clamp(-1.0, 1.0)).0
    }

    /// Harmonic face mobility `b(φ)` for a field; degenerate values are
    /// floored at [`DEGENERATE_FLOOR`].
    pub fn face_mobility(&self, phi: &ScalarField) -> Result<FaceCoeffs> {
        self.face_mobility_slice(phi.grid(), phi.values())
    }

    pub(crate) fn face_mobility_slice(&self, grid: &Grid, phi: &[f64]) -> Result<FaceCoeffs> {
        let cells: Vec<f64> = phi
            .iter()
            .map(|&v| {
                let b = self.b(v);
                if self.is_degenerate() {
                    b.max(DEGENERATE_FLOOR)
                } else {
                    b
                }
            })
            .collect();
        face_average_slice(grid, &cells, FaceAverage::Harmonic)
    }
}

/// `(b, b', b'')` at `s`.
pub fn mobility_eval(s: f64, spec: &MobilitySpec) -> Result<(f64, f64, f64)> {
    spec.eval(s)
}
