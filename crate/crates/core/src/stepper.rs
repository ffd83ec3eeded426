//! Convex-splitting time stepping for the Cahn–Hilliard system.
//!
//! One step solves
//!
//! ```text
//! (φ - φⁿ)/dt = div_h(b(φⁿ) ∇_h μ),
//! μ = -Δ_h φ + F'(φ) - Θ0 φⁿ + θ_s (φ - φⁿ),
//! ```
//!
//! with the convex part implicit, the concave part explicit and the mobility
//! lagged. The residual `R(φ) = φ - φⁿ + dt A_b μ(φ)`, `A_b = -div_h(b∇_h·)`,
//! is driven to zero by a damped Newton method. Each Newton system
//! `(I + dt A_b L) δ = -R`, `L = -Δ_h + diag(F'' + θ_s)`, is symmetrized by
//! left multiplication with `L` and solved by conjugate gradients with a
//! cosine-transform preconditioner.

use crate::diagnostics::{ledger_row, RunLedger};
use crate::error::{Error, Result};
use crate::grid::{
    div_b_grad_into, laplacian_into, mean, same_grid, weighted_grad_inner, FaceCoeffs, Grid, ScalarField,
};
use crate::linalg::{pcg, StopNorm};
use crate::spectral::NeumannSpectral;
use crate::thermo::{clamp_to_domain, psi_prime_field, MobilitySpec, PotentialParams, EPS_CLAMP};

/// Maximum number of step halvings in the Newton line search.
pub const MAX_HALVINGS: usize = 40;

/// Time-step control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    pub dt_min: f64,
    pub dt_max: f64,
    /// Factor in `(0, 1)` applied on hard steps.
    pub shrink: f64,
    /// Factor in `(1, 2]` applied after a run of easy steps.
    pub grow: f64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            dt_min: 1e-8,
            dt_max: 1e-1,
            shrink: 0.5,
            grow: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub newton_tol: f64,
    pub newton_max: usize,
    pub theta_stab: f64,
    /// Relative tolerance of the inner conjugate-gradient solves.
    pub linear_rtol: f64,
    pub linear_max_iter: usize,
    pub adaptive: Option<AdaptiveConfig>,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            newton_tol: 1e-10,
            newton_max: 30,
            theta_stab: 0.0,
            linear_rtol: 1e-6,
            linear_max_iter: 500,
            adaptive: None,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.dt.is_finite() && self.dt > 0.0) {
            bad.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.newton_tol > 0.0) {
            bad.push("newton_tol must be positive".into());
        }
        if self.newton_max == 0 {
            bad.push("newton_max must be at least 1".into());
        }
        if !(self.theta_stab >= 0.0 && self.theta_stab.is_finite()) {
            bad.push("theta_stab must be non-negative".into());
        }
        if !(self.linear_rtol > 0.0 && self.linear_rtol < 1.0) {
            bad.push("linear_rtol must lie in (0, 1)".into());
        }
        if self.linear_max_iter == 0 {
            bad.push("linear_max_iter must be at least 1".into());
        }
        if let Some(a) = &self.adaptive {
            if !(a.dt_min > 0.0 && a.dt_min <= a.dt_max) {
                bad.push("adaptive bounds must satisfy 0 < dt_min <= dt_max".into());
            } else if self.dt < a.dt_min || self.dt > a.dt_max {
                bad.push("dt must lie in [dt_min, dt_max]".into());
            }
            if !(a.shrink > 0.0 && a.shrink < 1.0) {
                bad.push("shrink must lie in (0, 1)".into());
            }
            if !(a.grow > 1.0 && a.grow <= 2.0) {
                bad.push("grow must lie in (1, 2]".into());
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(bad.join("; ")))
        }
    }
}

/// Order parameter, chemical potential and clock of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub phi: ScalarField,
    /// `-Δ_h φ + Ψ'(φ)`
    pub mu: ScalarField,
    pub t: f64,
    pub step: usize,
    /// Mean of the initial datum.
    pub mass0: f64,
}

/// `-Δ_h φ + Ψ'(φ)` with domain clamping.
pub fn chemical_potential(phi: &ScalarField, p: &PotentialParams) -> ScalarField {
    let grid = *phi.grid();
    let mut lap = vec![0.0; grid.len()];
    laplacian_into(&grid, phi.values(), &mut lap);
    let dpsi = psi_prime_field(phi, p);
    let v = lap.iter().zip(dpsi.values()).map(|(l, d)| d - l).collect();
    ScalarField::from_vec(grid, v)
}

impl SimState {
    /// State at `t = 0`; requires `|φ| < 1`.
    pub fn new(phi: ScalarField, p: &PotentialParams) -> Result<Self> {
        if let Some(v) = phi.values().iter().find(|v| v.abs() >= 1.0) {
            return Err(Error::Domain {
                value: *v,
                domain: "(-1, 1)",
            });
        }
        let mu = chemical_potential(&phi, p);
        let mass0 = phi.mean();
        Ok(Self {
            phi,
            mu,
            t: 0.0,
            step: 0,
            mass0,
        })
    }

    /// Clamp into `[-1 + EPS_CLAMP, 1 - EPS_CLAMP]` first.
    pub fn new_clamped(phi: &ScalarField, p: &PotentialParams) -> Result<Self> {
        Self::new(phi.map(|v| clamp_to_domain(v).0), p)
    }
}

/// Per-step record kept by the stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub dt: f64,
    pub newton_iters: usize,
    pub cg_iters: usize,
    /// Final value of the Newton merit.
    pub residual: f64,
    /// `E(φⁿ⁺¹) - E(φⁿ)`
    pub energy_change: f64,
    /// `dt Σ b(φⁿ)|∇_h μⁿ⁺¹|²`
    pub dissipation: f64,
    /// Rejected attempts before this step was accepted.
    pub retries: usize,
}

/// Decision of [`adaptive_dt`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtDecision {
    pub dt: f64,
    /// A shrink was requested while already at `dt_min`.
    pub at_floor: bool,
}

/// Next time step from the step history.
///
/// Shrinks after a step needing more than `2/3 newton_max` Newton
/// iterations or raising the energy by more than `10 newton_tol`; grows after
/// ten consecutive steps at the current `dt` with at most five iterations.
pub fn adaptive_dt(history: &[StepStats], dt: f64, cfg: &StepperConfig) -> DtDecision {
    let Some(a) = cfg.adaptive else {
        return DtDecision { dt, at_floor: false };
    };
    let Some(last) = history.last() else {
        return DtDecision { dt, at_floor: false };
    };
    let hard = 3 * last.newton_iters > 2 * cfg.newton_max || last.energy_change > 10.0 * cfg.newton_tol;
    if hard {
        return DtDecision {
            dt: (dt * a.shrink).max(a.dt_min),
            at_floor: dt <= a.dt_min,
        };
    }
    let easy = history
        .iter()
        .rev()
        .take_while(|s| s.newton_iters <= 5 && s.dt == dt)
        .count();
    if easy >= 10 {
        return DtDecision {
            dt: (dt * a.grow).min(a.dt_max),
            at_floor: false,
        };
    }
    DtDecision {
        dt: dt.clamp(a.dt_min, a.dt_max),
        at_floor: false,
    }
}

/// Advances one trajectory; keeps the current `dt` and the step history.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid,
    cfg: StepperConfig,
    params: PotentialParams,
    spec: MobilitySpec,
    spectral: NeumannSpectral,
    dt: f64,
    history: Vec<StepStats>,
    floor_warnings: usize,
}

struct NewtonOutcome {
    phi: Vec<f64>,
    mu_scheme: Vec<f64>,
    iterations: usize,
    cg_iters: usize,
    residual: f64,
}

impl Stepper {
    pub fn new(grid: Grid, cfg: StepperConfig, params: PotentialParams, spec: MobilitySpec) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            grid,
            spectral: NeumannSpectral::new(grid),
            dt: cfg.dt,
            cfg,
            params,
            spec,
            history: Vec::new(),
            floor_warnings: 0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn params(&self) -> &PotentialParams {
        &self.params
    }

    pub fn spec(&self) -> &MobilitySpec {
        &self.spec
    }

    pub fn history(&self) -> &[StepStats] {
        &self.history
    }

    /// Times a shrink was requested at `dt_min`.
    pub fn floor_warnings(&self) -> usize {
        self.floor_warnings
    }

    /// Advance by the current `dt`, never past `t_end`; with adaptivity, a
    /// failed or energy-raising attempt is retried with a smaller step.
    pub fn advance(&mut self, state: &SimState, t_end: f64) -> Result<(SimState, StepStats)> {
        let mut retries = 0;
        loop {
            let remaining = t_end - state.t;
            let (dt, clipped) = if self.dt >= remaining {
                (remaining, true)
            } else {
                (self.dt, false)
            };
            if !(dt > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "no time left to advance (t = {}, t_end = {t_end})",
                    state.t
                )));
            }
            let attempt = self.step_with(state, dt);
            match (attempt, self.cfg.adaptive) {
                (Ok((mut next, mut stats)), adaptive) => {
                    if let Some(a) = adaptive {
                        if stats.energy_change > 10.0 * self.cfg.newton_tol && self.dt > a.dt_min {
                            self.dt = (self.dt * a.shrink).max(a.dt_min);
                            retries += 1;
                            continue;
                        }
                    }
                    if clipped {
                        next.t = t_end;
                    }
                    stats.retries = retries;
                    self.history.push(stats);
                    if adaptive.is_some() {
                        let d = adaptive_dt(&self.history, self.dt, &self.cfg);
                        if d.at_floor {
                            self.floor_warnings += 1;
                        }
                        self.dt = d.dt;
                    }
                    return Ok((next, stats));
                }
                (Err(e @ Error::Newton { .. }), Some(a)) => {
                    if self.dt <= a.dt_min {
                        return Err(e);
                    }
                    self.dt = (self.dt * a.shrink).max(a.dt_min);
                    retries += 1;
                }
                (Err(e), _) => return Err(e),
            }
        }
    }

    /// One step of size `dt` from `state`, without any adaptivity.
    pub fn step_with(&self, state: &SimState, dt: f64) -> Result<(SimState, StepStats)> {
        same_grid(&self.grid, state.phi.grid())?;
        let lim = 1.0 - EPS_CLAMP;
        if let Some(v) = state.phi.values().iter().find(|v| v.abs() > lim) {
            return Err(Error::Precondition(format!(
                "state value {v} outside the clamped domain"
            )));
        }
        let faces = self.spec.face_mobility(&state.phi)?;
        let out = self.newton(state, &faces, dt)?;
        let grid = self.grid;
        let phi = ScalarField::new(grid, out.phi).map_err(|_| Error::NonFinite("step result".into()))?;
        let dissipation = dt * weighted_grad_inner(Some(&faces), &grid, &out.mu_scheme, &out.mu_scheme);
        let e_old = crate::thermo::energy_slice(&grid, state.phi.values(), &self.params);
        let e_new = crate::thermo::energy_slice(&grid, phi.values(), &self.params);
        let mu = chemical_potential(&phi, &self.params);
        let next = SimState {
            phi,
            mu,
            t: state.t + dt,
            step: state.step + 1,
            mass0: state.mass0,
        };
        Ok((
            next,
            StepStats {
                dt,
                newton_iters: out.iterations,
                cg_iters: out.cg_iters,
                residual: out.residual,
                energy_change: e_new - e_old,
                dissipation,
                retries: 0,
            },
        ))
    }

    fn newton(&self, state: &SimState, faces: &FaceCoeffs, dt: f64) -> Result<NewtonOutcome> {
        let grid = &self.grid;
        let n = grid.len();
        let p = &self.params;
        let ts = self.cfg.theta_stab;
        let th0 = p.theta0();
        let phin = state.phi.values();
        let mass0 = state.mass0;
        let bbar = faces.interior_mean();
        let sp = &self.spectral;
        let tol = self.cfg.newton_tol;

        let c0 = phin.iter().map(|&s| p.f_second_raw(clamp_to_domain(s).0)).sum::<f64>() / n as f64 + ts;
        let mut lap = vec![0.0; n];
        let mut flux = vec![0.0; n];
        let mut mu = vec![0.0; n];
        let mut res = vec![0.0; n];
        let mut scratch = vec![0.0; n];

        // R(φ) and μ(φ); returns the merit RMS(M⁻¹R) with M = I + dt b̄ K (K + c0)
        let mut residual = |phi: &[f64], mu: &mut [f64], res: &mut [f64], scratch: &mut [f64]| -> f64 {
            laplacian_into(grid, phi, &mut lap);
            for k in 0..n {
                let s = clamp_to_domain(phi[k]).0;
                mu[k] = -lap[k] + p.f_prime_raw(s) - th0 * phin[k] + ts * (phi[k] - phin[k]);
            }
            div_b_grad_into(faces, mu, &mut flux);
            for k in 0..n {
                res[k] = phi[k] - phin[k] - dt * flux[k];
            }
            sp.apply_symbol(res, scratch, |kap| 1.0 / (1.0 + dt * bbar * kap * (kap + c0)));
            (scratch.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt()
        };

        let mut phi = phin.to_vec();
        let mut merit = residual(&phi, &mut mu, &mut res, &mut scratch);
        if !merit.is_finite() {
            return Err(Error::NonFinite("Newton residual".into()));
        }
        let fail = |iterations: usize, residual: f64, reason: &str| Error::Newton {
            t: state.t,
            dt,
            iterations,
            residual,
            reason: reason.to_string(),
        };

        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut delta = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut mu_trial = vec![0.0; n];
        let mut res_trial = vec![0.0; n];
        let mut t1 = vec![0.0; n];
        let mut t2 = vec![0.0; n];
        let mut t3 = vec![0.0; n];
        let mut cg_total = 0;
        let lim = 1.0 - EPS_CLAMP;

        let apply_l = |diag: &[f64], v: &[f64], out: &mut [f64]| {
            laplacian_into(grid, v, out);
            for k in 0..n {
                out[k] = diag[k] * v[k] - out[k];
            }
        };

        for it in 1..=self.cfg.newton_max {
            for k in 0..n {
                diag[k] = p.f_second_raw(clamp_to_domain(phi[k]).0) + ts;
            }
            let c = mean(&diag);
            apply_l(&diag, &res, &mut rhs);
            rhs.iter_mut().for_each(|v| *v = -*v);

            let outcome = pcg(
                |v, out| {
                    apply_l(&diag, v, &mut t1);
                    div_b_grad_into(faces, &t1, &mut t2);
                    t2.iter_mut().for_each(|x| *x = -*x);
                    apply_l(&diag, &t2, &mut t3);
                    for k in 0..n {
                        out[k] = t1[k] + dt * t3[k];
                    }
                },
                |r, z| {
                    sp.apply_symbol(r, z, |kap| {
                        let l = kap + c;
                        1.0 / (l * (1.0 + dt * bbar * kap * l))
                    })
                },
                &rhs,
                &mut delta,
                self.cfg.linear_rtol,
                self.cfg.linear_max_iter,
                StopNorm::Preconditioned,
                false,
            );
            cg_total += outcome.iterations;
            if delta.iter().any(|v| !v.is_finite()) {
                return Err(fail(it, merit, "non-finite Newton increment"));
            }
            let dm = mean(&delta);
            delta.iter_mut().for_each(|v| *v -= dm);

            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                for k in 0..n {
                    trial[k] = phi[k] + lambda * delta[k];
                }
                let shift = mass0 - mean(&trial);
                trial.iter_mut().for_each(|v| *v += shift);
                if trial.iter().all(|v| v.abs() < lim) {
                    let m = residual(&trial, &mut mu_trial, &mut res_trial, &mut scratch);
                    if m.is_finite() && (m < merit || m <= tol) {
                        accepted = Some(m);
                        break;
                    }
                }
                lambda *= 0.5;
            }
            let Some(m) = accepted else {
                return Err(fail(it, merit, "line search failed"));
            };
            std::mem::swap(&mut phi, &mut trial);
            std::mem::swap(&mut mu, &mut mu_trial);
            std::mem::swap(&mut res, &mut res_trial);
            merit = m;
            if merit <= tol {
                return Ok(NewtonOutcome {
                    phi,
                    mu_scheme: mu,
                    iterations: it,
                    cg_iters: cg_total,
                    residual: merit,
                });
            }
        }
        Err(fail(self.cfg.newton_max, merit, "iteration cap reached"))
    }
}

/// One step of size `cfg.dt`.
pub fn step(state: &SimState, cfg: &StepperConfig, p: &PotentialParams, spec: &MobilitySpec) -> Result<SimState> {
    let stepper = Stepper::new(*state.phi.grid(), *cfg, *p, spec.clone())?;
    stepper.step_with(state, cfg.dt).map(|(s, _)| s)
}

/// Callback invoked after every accepted step.
pub type StepHook<'a> = dyn FnMut(&SimState, &StepStats, &RunLedger) -> Result<()> + 'a;

/// Integrate from `phi0` to time `t_end`, recording a ledger row per step.
///
/// Values of `phi0` at or beyond `±1` are clamped into the domain first.
pub fn run(
    phi0: &ScalarField,
    t_end: f64,
    cfg: &StepperConfig,
    p: &PotentialParams,
    spec: &MobilitySpec,
    hook: Option<&mut StepHook<'_>>,
) -> Result<(SimState, RunLedger)> {
    let mut stepper = Stepper::new(*phi0.grid(), *cfg, *p, spec.clone())?;
    let state = SimState::new_clamped(phi0, p)?;
    run_with(&mut stepper, state, t_end, hook)
}

/// [`run`] with a caller-owned stepper and initial state.
pub fn run_with(
    stepper: &mut Stepper,
    mut state: SimState,
    t_end: f64,
    mut hook: Option<&mut StepHook<'_>>,
) -> Result<(SimState, RunLedger)> {
    if !(t_end.is_finite() && t_end >= state.t) {
        return Err(Error::InvalidParameter(format!(
            "end time {t_end} precedes t = {}",
            state.t
        )));
    }
    let p = *stepper.params();
    let spec = stepper.spec().clone();
    let mut ledger = RunLedger::default();
    let mut cum = 0.0;
    ledger.push(ledger_row(&state, &p, &spec, cum)?);
    // stop when the leftover is below rounding of the clock
    let eps_t = 1e-12 * t_end.abs().max(1.0);
    while t_end - state.t > eps_t {
        let (next, stats) = stepper.advance(&state, t_end)?;
        cum += stats.dissipation;
        state = next;
        ledger.push(ledger_row(&state, &p, &spec, cum)?);
        if let Some(h) = hook.as_deref_mut() {
            h(&state, &stats, &ledger)?;
        }
    }
    Ok((state, ledger))
}
