//! Stationary states under a mass constraint and convergence monitoring.
//!
//! A stationary state satisfies `-Δ_h φ + Ψ'(φ) = const` with prescribed mean.
//! The primary solver integrates the evolution until the chemical potential
//! is flat; an optional damped Newton iteration polishes the result.

use crate::diagnostics::RunLedger;
use crate::elliptic::hm1_norm_with;
use crate::error::{Error, Result};
use crate::grid::{laplacian_into, mean, weighted_grad_inner, Grid, ScalarField};
use crate::linalg::{pcg, StopNorm};
use crate::spectral::NeumannSpectral;
use crate::stepper::{SimState, Stepper, StepperConfig};
use crate::thermo::{clamp_to_domain, energy, MobilitySpec, PotentialParams, EPS_CLAMP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SteadyMethod {
    #[default]
    LongTimeIntegration,
    /// Long-time integration followed by a damped Newton polish.
    DampedNewton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyConfig {
    pub tol_residual: f64,
    pub tol_gradmu: f64,
    pub max_time: f64,
    pub method: SteadyMethod,
    /// Integrator settings; adaptive stepping is recommended.
    pub stepper: StepperConfig,
}

impl Default for SteadyConfig {
    fn default() -> Self {
        Self {
            tol_residual: 1e-9,
            tol_gradmu: 1e-8,
            max_time: 100.0,
            method: SteadyMethod::LongTimeIntegration,
            stepper: StepperConfig {
                dt: 1e-4,
                adaptive: Some(Default::default()),
                ..Default::default()
            },
        }
    }
}

impl SteadyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0 && self.tol_gradmu > 0.0 && self.max_time > 0.0) {
            return Err(Error::InvalidParameter(
                "steady tolerances and max_time must be positive".into(),
            ));
        }
        self.stepper.validate()
    }
}

/// `‖-Δ_h φ + Ψ'(φ) - mean Ψ'(φ)‖ / √|Ω|`.
pub fn stationarity_residual(phi: &ScalarField, p: &PotentialParams) -> Result<f64> {
    if let Some(v) = phi.values().iter().find(|v| v.abs() >= 1.0) {
        return Err(Error::Domain {
            value: *v,
            domain: "(-1, 1)",
        });
    }
    let r = stationary_defect(phi.grid(), phi.values(), p);
    Ok((r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt())
}

/// `-Δ_h φ + Ψ'(φ)` minus its mean.
fn stationary_defect(grid: &Grid, phi: &[f64], p: &PotentialParams) -> Vec<f64> {
    let mut r = vec![0.0; phi.len()];
    laplacian_into(grid, phi, &mut r);
    for (rk, &s) in r.iter_mut().zip(phi) {
        *rk = p.psi_prime_raw(clamp_to_domain(s).0) - *rk;
    }
    let m = mean(&r);
    r.iter_mut().for_each(|v| *v -= m);
    r
}

/// Result of [`solve_stationary`].
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyOutcome {
    /// Converged state, or the best state reached.
    pub phi: ScalarField,
    pub converged: bool,
    /// Simulated time used.
    pub t: f64,
    pub residual: f64,
    /// `‖∇_h μ‖` at the end.
    pub grad_mu: f64,
    pub energy: f64,
    pub ledger: RunLedger,
    /// Snapshots at geometrically growing times, for [`omega_limit_monitor`].
    pub snapshots: Vec<(f64, ScalarField)>,
    /// Whether the Newton polish was applied and improved the residual.
    pub polished: bool,
}

/// Stationary state with mean `m`, reached from `init`.
///
/// Integrates until `‖∇_h μ‖ ≤ tol_gradmu` and the stationarity residual is at
/// most `tol_residual`; when `max_time` elapses first, the last state is
/// returned with `converged = false`.
pub fn solve_stationary(
    m: f64,
    init: &ScalarField,
    cfg: &SteadyConfig,
    p: &PotentialParams,
    spec: &MobilitySpec,
) -> Result<SteadyOutcome> {
    cfg.validate()?;
    if (init.mean() - m).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "initial mean {} differs from the prescribed mass {m}",
            init.mean()
        )));
    }
    let grid = *init.grid();
    let mut stepper = Stepper::new(grid, cfg.stepper, *p, spec.clone())?;
    let state = SimState::new_clamped(init, p)?;

    let mut snapshots = vec![(0.0, state.phi.clone())];
    let mut next_snap = 0.01f64;
    let mut done = converged_state(&state, p, cfg)?;
    let (state, ledger) = if done {
        let mut ledger = RunLedger::default();
        ledger.push(crate::diagnostics::ledger_row(&state, p, spec, 0.0)?);
        (state, ledger)
    } else {
        let stop = |s: &SimState| -> Result<bool> {
            if s.t >= next_snap {
                snapshots.push((s.t, s.phi.clone()));
                next_snap *= 1.5;
            }
            let c = converged_state(s, p, cfg)?;
            done = c;
            Ok(c)
        };
        run_until(&mut stepper, state, cfg.max_time, stop, p, spec)?
    };
    if snapshots.last().map(|s| s.0) != Some(state.t) {
        snapshots.push((state.t, state.phi.clone()));
    }

    let mut phi = state.phi.clone();
    let mut polished = false;
    if cfg.method == SteadyMethod::DampedNewton {
        if let Ok(better) = newton_polish(&phi, p, cfg.tol_residual) {
            if stationarity_residual(&better, p)? < stationarity_residual(&phi, p)? {
                phi = better;
                polished = true;
            }
        }
    }
    let residual = stationarity_residual(&phi, p)?;
    let mu = crate::stepper::chemical_potential(&phi, p);
    let grad_mu = weighted_grad_inner(None, &grid, mu.values(), mu.values())
        .max(0.0)
        .sqrt();
    let converged = done || (residual <= cfg.tol_residual && grad_mu <= cfg.tol_gradmu);
    Ok(SteadyOutcome {
        energy: energy(&phi, p)?,
        phi,
        converged,
        t: state.t,
        residual,
        grad_mu,
        ledger,
        snapshots,
        polished,
    })
}

fn converged_state(s: &SimState, p: &PotentialParams, cfg: &SteadyConfig) -> Result<bool> {
    let mu = s.mu.values();
    let g = weighted_grad_inner(None, s.mu.grid(), mu, mu).max(0.0).sqrt();
    Ok(g <= cfg.tol_gradmu && stationarity_residual(&s.phi, p)? <= cfg.tol_residual)
}

/// Integrate until `t_end` or until `stop` returns true.
fn run_until(
    stepper: &mut Stepper,
    mut state: SimState,
    t_end: f64,
    mut stop: impl FnMut(&SimState) -> Result<bool>,
    p: &PotentialParams,
    spec: &MobilitySpec,
) -> Result<(SimState, RunLedger)> {
    let mut ledger = RunLedger::default();
    let mut cum = 0.0;
    ledger.push(crate::diagnostics::ledger_row(&state, p, spec, cum)?);
    let eps_t = 1e-12 * t_end.max(1.0);
    while t_end - state.t > eps_t {
        let (next, stats) = stepper.advance(&state, t_end)?;
        cum += stats.dissipation;
        state = next;
        ledger.push(crate::diagnostics::ledger_row(&state, p, spec, cum)?);
        if stop(&state)? {
            break;
        }
    }
    Ok((state, ledger))
}

/// Damped Newton on `-Δ_h φ + Ψ'(φ) = λ`, `mean φ` fixed, with increments
/// restricted to zero mean (the multiplier `λ` absorbs the mean of the
/// equation). Fails when the linearization is not positive on the
/// zero-mean subspace.
fn newton_polish(phi0: &ScalarField, p: &PotentialParams, tol: f64) -> Result<ScalarField> {
    let grid = *phi0.grid();
    let n = grid.len();
    let sp = NeumannSpectral::new(grid);
    let mut phi = phi0.values().to_vec();
    let m0 = mean(&phi);
    let rms = |r: &[f64]| (r.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let mut r = stationary_defect(&grid, &phi, p);
    let mut norm = rms(&r);
    let lim = 1.0 - EPS_CLAMP;
    let mut lap = vec![0.0; n];
    let mut delta = vec![0.0; n];
    for _ in 0..20 {
        if norm <= tol {
            break;
        }
        let d: Vec<f64> = phi
            .iter()
            .map(|&s| p.f_second_raw(clamp_to_domain(s).0) - p.theta0())
            .collect();
        let shift = d.iter().copied().fold(f64::INFINITY, f64::min).min(0.0).abs() + 1.0;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let out = pcg(
            |v, out| {
                laplacian_into(&grid, v, &mut lap);
                for k in 0..n {
                    out[k] = d[k] * v[k] - lap[k];
                }
                let mo = mean(out);
                out.iter_mut().for_each(|x| *x -= mo);
            },
            |res, z| sp.apply_symbol(res, z, |kap| if kap == 0.0 { 0.0 } else { 1.0 / (kap + shift) }),
            &rhs,
            &mut delta,
            1e-12,
            1000,
            StopNorm::Residual,
            true,
        );
        if !out.converged {
            return Err(Error::NotConverged {
                solver: "stationary Newton",
                iterations: out.iterations,
                residual: out.rel_residual,
            });
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial: Vec<f64> = phi.iter().zip(&delta).map(|(a, b)| a + lambda * b).collect();
            let s = m0 - mean(&trial);
            trial.iter_mut().for_each(|v| *v += s);
            if trial.iter().all(|v| v.abs() < lim) {
                let rt = stationary_defect(&grid, &trial, p);
                let nt = rms(&rt);
                if nt < norm {
                    phi = trial;
                    r = rt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    ScalarField::new(grid, phi)
}

/// Number of trailing snapshot increments judged by [`omega_limit_monitor`].
///
/// Snapshot times grow geometrically, so earlier increments span the
/// coarsening transient, whose increments legitimately grow.
pub const OMEGA_TAIL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaVerdict {
    Converging,
    Stalled,
    Oscillating,
}

/// Output of [`omega_limit_monitor`].
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaReport {
    pub verdict: OmegaVerdict,
    /// `‖∇_h μ‖` at the start and end of the trailing window.
    pub grad_mu_start: f64,
    pub grad_mu_end: f64,
    /// `‖∇_h G(φ(t_{i+1}) - φ(t_i))‖` between successive snapshots.
    pub increments: Vec<f64>,
    /// Whether the last [`OMEGA_TAIL`] increments are non-increasing.
    pub increments_decreasing: bool,
}

/// Trend-based convergence verdict over the trailing `window` ledger rows and
/// the given snapshots.
pub fn omega_limit_monitor(ledger: &RunLedger, snapshots: &[(f64, ScalarField)], window: usize) -> Result<OmegaReport> {
    if window == 0 || ledger.len() < 2 * window {
        return Err(Error::Precondition(format!(
            "ledger of length {} is too short for window {window}",
            ledger.len()
        )));
    }
    let tail = &ledger.rows[ledger.len() - window..];
    let g: Vec<f64> = tail.iter().map(|r| r.grad_mu_sq.max(0.0).sqrt()).collect();
    let increments = match snapshots.first() {
        Some((_, f)) => {
            let sp = NeumannSpectral::new(*f.grid());
            snapshots
                .windows(2)
                .map(|w| hm1_norm_with(&sp, &w[1].1.sub(&w[0].1)?.zero_mean()))
                .collect::<Result<Vec<f64>>>()?
        }
        None => Vec::new(),
    };
    let tail_inc = &increments[increments.len().saturating_sub(OMEGA_TAIL)..];
    let increments_decreasing = tail_inc.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-300);
    let (g0, g1) = (g[0], g[g.len() - 1]);
    let scale = g.iter().copied().fold(0.0, f64::max);
    // sign changes of the increments of ‖∇μ‖ beyond rounding
    let diffs: Vec<f64> = g
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| d.abs() > 1e-12 * scale)
        .collect();
    let flips = diffs.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    let verdict = if scale == 0.0 || (g1 <= g0 && flips <= window / 4 && increments_decreasing) {
        OmegaVerdict::Converging
    } else if flips > window / 2 {
        OmegaVerdict::Oscillating
    } else {
        OmegaVerdict::Stalled
    };
    Ok(OmegaReport {
        verdict,
        grad_mu_start: g0,
        grad_mu_end: g1,
        increments,
        increments_decreasing,
    })
}
