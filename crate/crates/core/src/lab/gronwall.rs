//! Gronwall-type bounds and their brute-force ODE oracles.
//!
//! Two closed-form bounds are checked:
//!
//! * for `f' ≤ (M/σ) g f^{1+σ}` for every `σ ∈ (0, δ)`:
//!   `f(t) ≤ f(0)(2^{1/δ} + f(0))^{2^{2 + 16 M ∫g}}`;
//! * for `f' ≤ g f + h` with window integrals of `f, g, h` over length `r`
//!   bounded by `a1, a2, a3`: `f(t) ≤ (a1/r + a3) e^{a2}` for `t ≥ t0 + r`.

use rand::Rng;
use rayon::prelude::*;

use super::ode::rk4_self_consistent;
use crate::error::{Error, Result};
use crate::rng::{purpose, sample_stream};

/// Relative slack allowed when comparing oracle values with a bound.
pub const ORACLE_SLACK: f64 = 1e-6;

/// Target agreement of successive RK4 refinements.
pub const RK4_CONSISTENCY: f64 = 1e-6;

/// Data of the power-type differential inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSpec {
    pub f0: f64,
    pub m: f64,
    pub delta: f64,
    pub sigma: f64,
    /// Values of the step function `g` on equal pieces of `[0, T0]`.
    pub g: Vec<f64>,
    pub t0: f64,
}

impl OdeSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.f0 > 0.0
            && self.m > 0.0
            && self.delta > 0.0
            && self.delta <= 1.0
            && self.sigma > 0.0
            && self.sigma < self.delta
            && self.t0 > 0.0
            && !self.g.is_empty()
            && self.g.iter().all(|v| v.is_finite() && *v >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid ODE data {self:?}")))
        }
    }

    /// `∫_0^{T0} g`.
    pub fn integral_g(&self) -> f64 {
        self.g.iter().sum::<f64>() * self.t0 / self.g.len() as f64
    }

    fn breaks(&self) -> Vec<f64> {
        let n = self.g.len();
        (0..=n).map(|k| self.t0 * k as f64 / n as f64).collect()
    }
}

/// A bound that may exceed the floating-point range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    /// The bound, `+∞` on overflow.
    pub value: f64,
    /// Natural logarithm of the bound, `+∞` if even that overflows.
    pub ln_value: f64,
    pub overflow: bool,
}

/// `f0 (2^{1/δ} + f0)^{2^{2 + 16 M ∫g}}`, evaluated in log space.
pub fn gronwall_liu_zhang_bound(spec: &OdeSpec) -> Result<Bound> {
    spec.validate()?;
    Ok(liu_zhang_from_parts(spec.f0, spec.m, spec.delta, spec.integral_g()))
}

/// The same bound from `f0`, `M`, `δ` and `∫g` directly.
pub fn liu_zhang_from_parts(f0: f64, m: f64, delta: f64, int_g: f64) -> Bound {
    let exponent = (2.0 + 16.0 * m * int_g).exp2();
    let ln_value = f0.ln() + exponent * ((1.0 / delta).exp2() + f0).ln();
    let value = ln_value.exp();
    Bound {
        value,
        ln_value,
        overflow: !value.is_finite(),
    }
}

/// `(a1/r + a3) e^{a2}`.
pub fn uniform_gronwall_bound(a1: f64, a2: f64, a3: f64, r: f64) -> Result<f64> {
    if !(a1 >= 0.0 && a2 >= 0.0 && a3 >= 0.0 && r > 0.0) {
        return Err(Error::InvalidParameter(
            "uniform Gronwall data need a1, a2, a3 >= 0 and r > 0".into(),
        ));
    }
    Ok((a1 / r + a3) * a2.exp())
}

/// Which right-hand side realizes the power-type inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeVariant {
    /// `f' = (M/σ) g f^{1+σ}` at the prescribed `σ`.
    FixedSigma,
    /// `f' = M g f · inf_{σ∈(0,δ)} f^σ/σ`, equality in the hypothesis for
    /// every admissible `σ` simultaneously.
    Saturated,
}

/// `ln inf_{σ∈(0,δ)} f^σ/σ` at `u = ln f`.
pub(crate) fn ln_saturation(u: f64, delta: f64) -> f64 {
    if u * delta > 1.0 {
        // minimizer σ = 1/ln f inside the interval: value e ln f
        1.0 + u.ln()
    } else {
        delta * u - delta.ln()
    }
}

/// Oracle outcome for one spec.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerOracle {
    pub spec: OdeSpec,
    pub variant: OdeVariant,
    /// `max_t ln f(t)` of the RK4 solution.
    pub ln_max: f64,
    pub bound: Bound,
    pub consistency: f64,
    pub consistent: bool,
    pub violated: bool,
}

/// Integrate the chosen realization in `u = ln f` and compare with the bound.
pub fn power_oracle(spec: &OdeSpec, variant: OdeVariant) -> Result<PowerOracle> {
    spec.validate()?;
    let bound = gronwall_liu_zhang_bound(spec)?;
    let (m, sigma, delta) = (spec.m, spec.sigma, spec.delta);
    let g = spec.g.clone();
    let rhs = move |i: usize, _t: f64, u: f64| -> f64 {
        let gi = g[i];
        if gi == 0.0 {
            return 0.0;
        }
        match variant {
            // u' = f'/f = (M/σ) g f^σ
            OdeVariant::FixedSigma => m / sigma * gi * (sigma * u).exp(),
            OdeVariant::Saturated => m * gi * ln_saturation(u, delta).exp(),
        }
    };
    // absolute agreement in ln f is relative agreement in f
    let tr = rk4_self_consistent(
        &spec.breaks(),
        spec.f0.ln(),
        &rhs,
        |a, b| (a - b).abs(),
        RK4_CONSISTENCY,
        8,
        1 << 16,
    )
    .ok_or_else(|| Error::NonFinite("power-type ODE oracle".into()))?;
    let ln_max = tr.y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let violated = ln_max > bound.ln_value + ORACLE_SLACK.ln_1p();
    Ok(PowerOracle {
        spec: spec.clone(),
        variant,
        ln_max,
        bound,
        consistency: tr.consistency,
        consistent: tr.consistent,
        violated,
    })
}

/// Random spec number `index` for the given seed.
///
/// For the fixed-σ variant `g` is rescaled so that `M f0^σ ∫g ≤ 1/2`, which
/// keeps the solution `f0 (1 - M f0^σ ∫g)^{-1/σ}` finite on `[0, T0]`, and
/// `σ ∈ [δ/2, δ)`.
pub fn random_ode_spec(seed: u64, index: u64, variant: OdeVariant) -> OdeSpec {
    let mut rng = sample_stream(seed, purpose::GRONWALL, index);
    let f0 = 10f64.powf(rng.gen_range(-1.0..1.0));
    let m = 10f64.powf(rng.gen_range(-2.0..0.0));
    let delta = rng.gen_range(0.2..=1.0);
    let sigma = delta * rng.gen_range(0.5..0.95);
    let t0 = rng.gen_range(0.5..2.0);
    let pieces = rng.gen_range(1..=8);
    let mut g: Vec<f64> = (0..pieces).map(|_| rng.gen_range(0.0..2.0)).collect();
    let mut spec = OdeSpec {
        f0,
        m,
        delta,
        sigma,
        g: g.clone(),
        t0,
    };
    if variant == OdeVariant::FixedSigma {
        let x = m * f0.powf(sigma) * spec.integral_g();
        if x > 0.5 {
            g.iter_mut().for_each(|v| *v *= 0.5 / x);
            spec.g = g;
        }
    }
    spec
}

/// Summary of an oracle sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub cases: usize,
    pub violations: usize,
    /// Cases whose RK4 refinement did not reach the consistency target.
    pub inconsistent: usize,
    pub worst_consistency: f64,
    /// Smallest `ln(bound) - ln(max f)` (or `bound/max f` for the uniform
    /// lemma, as a log ratio).
    pub min_log_margin: f64,
}

fn summarize(items: impl Iterator<Item = (bool, bool, f64, f64)>) -> SweepSummary {
    let mut s = SweepSummary {
        cases: 0,
        violations: 0,
        inconsistent: 0,
        worst_consistency: 0.0,
        min_log_margin: f64::INFINITY,
    };
    for (violated, consistent, consistency, margin) in items {
        s.cases += 1;
        s.violations += violated as usize;
        s.inconsistent += (!consistent) as usize;
        s.worst_consistency = s.worst_consistency.max(consistency);
        s.min_log_margin = s.min_log_margin.min(margin);
    }
    s
}

/// Check the power-type bound on `count` random specs.
pub fn power_sweep(seed: u64, count: usize, variant: OdeVariant) -> Result<(SweepSummary, Vec<PowerOracle>)> {
    let cases: Vec<PowerOracle> = (0..count as u64)
        .into_par_iter()
        .map(|i| power_oracle(&random_ode_spec(seed, i, variant), variant))
        .collect::<Result<_>>()?;
    let summary = summarize(
        cases
            .iter()
            .map(|c| (c.violated, c.consistent, c.consistency, c.bound.ln_value - c.ln_max)),
    );
    Ok((summary, cases))
}

/// Data of the linear inequality `f' = (g - k) f + h ≤ g f + h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOdeSpec {
    pub f0: f64,
    /// Step-function values on equal pieces of `[0, t_end]`.
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub k: Vec<f64>,
    pub t_end: f64,
    /// Window length, an integer number of pieces.
    pub window_pieces: usize,
}

impl LinearOdeSpec {
    fn width(&self) -> f64 {
        self.t_end / self.g.len() as f64
    }

    pub fn r(&self) -> f64 {
        self.window_pieces as f64 * self.width()
    }
}

/// Oracle outcome for the uniform lemma.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformOracle {
    pub spec: LinearOdeSpec,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub bound: f64,
    /// `max f(t)` over `t ≥ r`.
    pub f_max: f64,
    pub consistency: f64,
    pub consistent: bool,
    pub violated: bool,
}

fn max_window_sum(v: &[f64], pieces: usize, width: f64) -> f64 {
    v.windows(pieces)
        .map(|w| w.iter().sum::<f64>() * width)
        .fold(0.0, f64::max)
}

/// RK4 solution of the linear ODE, window integrals taken over the horizon,
/// and comparison with `(a1/r + a3) e^{a2}` for `t ≥ r`.
pub fn uniform_oracle(spec: &LinearOdeSpec) -> Result<UniformOracle> {
    let n = spec.g.len();
    if spec.window_pieces == 0 || spec.window_pieces > n || !(spec.f0 > 0.0) {
        return Err(Error::InvalidParameter("invalid linear ODE data".into()));
    }
    let w = spec.width();
    let breaks: Vec<f64> = (0..=n).map(|i| spec.t_end * i as f64 / n as f64).collect();
    let (g, h, k) = (spec.g.clone(), spec.h.clone(), spec.k.clone());
    let rhs = move |i: usize, _t: f64, f: f64| (g[i] - k[i]) * f + h[i];
    let tr = rk4_self_consistent(
        &breaks,
        spec.f0,
        &rhs,
        |a, b| ((a - b) / b.abs().max(1e-300)).abs(),
        RK4_CONSISTENCY,
        8,
        1 << 16,
    )
    .ok_or_else(|| Error::NonFinite("linear ODE oracle".into()))?;
    let per_piece = tr.steps_per_piece;
    let dt = w / per_piece as f64;
    // cumulative trapezoid integral of f on the grid
    let mut cum = vec![0.0; tr.y.len()];
    for i in 1..tr.y.len() {
        cum[i] = cum[i - 1] + 0.5 * dt * (tr.y[i] + tr.y[i - 1]);
    }
    let span = spec.window_pieces * per_piece;
    let f_sup = tr.y.iter().copied().fold(0.0, f64::max);
    // grid maximum plus the largest possible change between grid starts
    let a1 = (0..tr.y.len() - span)
        .map(|i| cum[i + span] - cum[i])
        .fold(0.0, f64::max)
        + f_sup * dt;
    let a2 = max_window_sum(&spec.g, spec.window_pieces, w);
    let a3 = max_window_sum(&spec.h, spec.window_pieces, w);
    let r = spec.r();
    let bound = uniform_gronwall_bound(a1, a2, a3, r)?;
    let f_max = tr.y[span..].iter().copied().fold(0.0, f64::max);
    Ok(UniformOracle {
        spec: spec.clone(),
        a1,
        a2,
        a3,
        bound,
        f_max,
        consistency: tr.consistency,
        consistent: tr.consistent,
        violated: f_max > bound * (1.0 + ORACLE_SLACK),
    })
}

/// Random linear spec number `index`.
pub fn random_linear_spec(seed: u64, index: u64) -> LinearOdeSpec {
    let mut rng = sample_stream(seed, purpose::UNIFORM_GRONWALL, index);
    let n = rng.gen_range(6..=16);
    let window_pieces = rng.gen_range(1..=n / 3);
    LinearOdeSpec {
        f0: rng.gen_range(0.1..5.0),
        g: (0..n).map(|_| rng.gen_range(0.0..1.5)).collect(),
        h: (0..n).map(|_| rng.gen_range(0.0..2.0)).collect(),
        k: (0..n).map(|_| rng.gen_range(0.0..3.0)).collect(),
        t_end: rng.gen_range(2.0..8.0),
        window_pieces,
    }
}

/// Check the uniform lemma on `count` random specs.
pub fn uniform_sweep(seed: u64, count: usize) -> Result<(SweepSummary, Vec<UniformOracle>)> {
    let cases: Vec<UniformOracle> = (0..count as u64)
        .into_par_iter()
        .map(|i| uniform_oracle(&random_linear_spec(seed, i)))
        .collect::<Result<_>>()?;
    let summary = summarize(
        cases
            .iter()
            .map(|c| (c.violated, c.consistent, c.consistency, (c.bound / c.f_max).ln())),
    );
    Ok((summary, cases))
}
