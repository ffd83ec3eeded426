//! Run ledgers and the structural quantities of a trajectory: energy
//! balance, separation from the pure phases, the mean chemical potential,
//! `Λ(t)` and `B(t)`, and continuous dependence in the weighted dual norm.

use crate::elliptic::{hm1_norm_with, weighted_dual_norm_faces, EllipticWorkspace};
use crate::error::{Error, Result};
use crate::grid::{weighted_grad_inner, ScalarField};
use crate::spectral::NeumannSpectral;
use crate::stepper::{SimState, Stepper, StepperConfig};
use crate::thermo::{energy, energy_convex, psi_prime_field, MobilitySpec, PotentialParams};

/// One ledger row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub t: f64,
    pub mass: f64,
    /// `E(φ)`
    pub e: f64,
    /// `E_0(φ)`
    pub e0: f64,
    /// `‖∇_h μ‖²`
    pub grad_mu_sq: f64,
    /// `Λ = Σ b(φ)|∇_h μ|²`
    pub lambda: f64,
    /// `B = 1 + Λ`
    pub b: f64,
    /// `min (1 - |φ|)`
    pub sep: f64,
    pub mu_bar: f64,
    /// `Σ dt Σ b(φⁿ)|∇_h μⁿ⁺¹|²` up to this row
    pub cum_dissipation: f64,
}

impl LedgerRow {
    /// Values in CSV column order.
    pub fn values(&self) -> [f64; 10] {
        [
            self.t,
            self.mass,
            self.e,
            self.e0,
            self.grad_mu_sq,
            self.lambda,
            self.b,
            self.sep,
            self.mu_bar,
            self.cum_dissipation,
        ]
    }

    pub fn from_values(v: [f64; 10]) -> Self {
        Self {
            t: v[0],
            mass: v[1],
            e: v[2],
            e0: v[3],
            grad_mu_sq: v[4],
            lambda: v[5],
            b: v[6],
            sep: v[7],
            mu_bar: v[8],
            cum_dissipation: v[9],
        }
    }
}

/// Time series recorded along a trajectory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLedger {
    pub rows: Vec<LedgerRow>,
    /// Seed of the initial datum, when random.
    pub seed: Option<u64>,
}

impl RunLedger {
    pub fn push(&mut self, row: LedgerRow) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&LedgerRow> {
        self.rows.last()
    }

    /// Largest `E(φⁿ⁺¹) - E(φⁿ)` over consecutive rows (`-∞` if fewer than two).
    pub fn max_energy_increase(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| w[1].e - w[0].e)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `|mass - mass(0)|`.
    pub fn max_mass_drift(&self) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        self.rows
            .iter()
            .map(|r| (r.mass - first.mass).abs())
            .fold(0.0, f64::max)
    }
}

/// `min (1 - |φ|)`, clipped to `[0, 1]`.
pub fn separation_margin(phi: &ScalarField) -> f64 {
    phi.values()
        .iter()
        .map(|v| 1.0 - v.abs())
        .fold(1.0, f64::min)
        .clamp(0.0, 1.0)
}

/// Ledger row for a state, given the accumulated dissipation.
pub fn ledger_row(
    state: &SimState,
    p: &PotentialParams,
    spec: &MobilitySpec,
    cum_dissipation: f64,
) -> Result<LedgerRow> {
    let grid = state.phi.grid();
    let mu = state.mu.values();
    let faces = spec.face_mobility(&state.phi)?;
    let lambda = weighted_grad_inner(Some(&faces), grid, mu, mu);
    let row = LedgerRow {
        t: state.t,
        mass: state.phi.mean(),
        e: energy(&state.phi, p)?,
        e0: energy_convex(&state.phi, p)?,
        grad_mu_sq: weighted_grad_inner(None, grid, mu, mu),
        lambda,
        b: 1.0 + lambda,
        sep: separation_margin(&state.phi),
        mu_bar: state.mu.mean(),
        cum_dissipation,
    };
    if row.values().iter().all(|v| v.is_finite()) {
        Ok(row)
    } else {
        Err(Error::NonFinite(format!("ledger row at t = {}", state.t)))
    }
}

/// `|E(end) + cum_dissipation(end) - E(start)|`.
pub fn energy_balance_defect(ledger: &RunLedger) -> Result<f64> {
    if ledger.len() < 2 {
        return Err(Error::Precondition(
            "energy balance needs at least two ledger rows".into(),
        ));
    }
    let first = ledger.rows[0];
    let last = ledger.rows[ledger.len() - 1];
    Ok((last.e + (last.cum_dissipation - first.cum_dissipation) - first.e).abs())
}

/// Mean chemical potential and its control by the gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuMeanReport {
    /// `mean Ψ'(φ)`
    pub mu_bar: f64,
    /// `mean μ` of the stored chemical potential
    pub mu_bar_state: f64,
    /// `‖∇_h μ‖`
    pub grad_mu: f64,
    /// `|μ̄| / (1 + ‖∇_h μ‖)`
    pub ratio: f64,
}

/// `μ̄ = mean Ψ'(φ)` together with `|μ̄| / (1 + ‖∇_h μ‖)`.
pub fn mu_mean_check(state: &SimState, p: &PotentialParams) -> MuMeanReport {
    let mu_bar = psi_prime_field(&state.phi, p).mean();
    let mu = state.mu.values();
    let grad_mu = weighted_grad_inner(None, state.mu.grid(), mu, mu).max(0.0).sqrt();
    MuMeanReport {
        mu_bar,
        mu_bar_state: state.mu.mean(),
        grad_mu,
        ratio: mu_bar.abs() / (1.0 + grad_mu),
    }
}

/// `(t, Λ, B)` columns and their tails.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSeries {
    pub t: Vec<f64>,
    pub lambda: Vec<f64>,
    pub b: Vec<f64>,
    /// `(τ, sup_{t ≥ τ} Λ(t))` for `τ ∈ {0.1, 0.5, 1}`; `None` when the run
    /// ends before `τ`.
    pub sup_after: Vec<(f64, Option<f64>)>,
    /// Largest `|B - 1 - Λ|` over rows.
    pub b_defect: f64,
}

pub fn lambda_b_series(ledger: &RunLedger) -> LambdaSeries {
    let t: Vec<f64> = ledger.rows.iter().map(|r| r.t).collect();
    let lambda: Vec<f64> = ledger.rows.iter().map(|r| r.lambda).collect();
    let b: Vec<f64> = ledger.rows.iter().map(|r| r.b).collect();
    let sup_after = [0.1, 0.5, 1.0]
        .iter()
        .map(|&tau| {
            let sup = ledger
                .rows
                .iter()
                .filter(|r| r.t >= tau)
                .map(|r| r.lambda)
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
            (tau, sup)
        })
        .collect();
    let b_defect = ledger
        .rows
        .iter()
        .map(|r| (r.b - 1.0 - r.lambda).abs())
        .fold(0.0, f64::max);
    LambdaSeries {
        t,
        lambda,
        b,
        sup_after,
        b_defect,
    }
}

/// Output of [`continuous_dependence_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    /// Output times.
    pub t: Vec<f64>,
    /// `d(t) = ‖√b(φ₁) ∇_h G_{φ₁}(φ₁ - φ₂)‖`
    pub d: Vec<f64>,
    /// Same metric with `φ₂` as the weight carrier.
    pub d_swapped: Vec<f64>,
    /// `‖∇_h G(φ₁ - φ₂)‖`
    pub hm1: Vec<f64>,
    /// `max_t d(t)/d(0)`; `None` when `d(0) = 0`.
    pub c_emp: Option<f64>,
    /// Whether `√b_m d ≤ ‖∇G(φ₁-φ₂)‖ ≤ √b_M d` held at every output time
    /// (relative slack `1e-9`).
    pub sandwich_holds: bool,
}

impl ContinuityReport {
    pub fn d0(&self) -> f64 {
        self.d[0]
    }

    pub fn d_end(&self) -> f64 {
        *self.d.last().expect("report has at least one output time")
    }

    /// `d(T)/d(0)`; `None` when `d(0) = 0`.
    pub fn ratio_end(&self) -> Option<f64> {
        (self.d0() > 0.0).then(|| self.d_end() / self.d0())
    }
}

fn trajectory_snapshots(
    phi0: &ScalarField,
    t_end: f64,
    every: usize,
    cfg: &StepperConfig,
    p: &PotentialParams,
    spec: &MobilitySpec,
) -> Result<Vec<(f64, ScalarField)>> {
    let mut stepper = Stepper::new(*phi0.grid(), *cfg, *p, spec.clone())?;
    let mut state = SimState::new_clamped(phi0, p)?;
    let mut out = vec![(state.t, state.phi.clone())];
    let eps_t = 1e-12 * t_end.abs().max(1.0);
    while t_end - state.t > eps_t {
        let (next, _) = stepper.advance(&state, t_end)?;
        state = next;
        if state.step % every == 0 || t_end - state.t <= eps_t {
            out.push((state.t, state.phi.clone()));
        }
    }
    Ok(out)
}

/// Evolve two data with identical configuration (concurrently) and measure
/// their distance in the weighted dual norm every `every` steps and at `T`.
///
/// Requires equal means and a fixed time step, so that output times align.
pub fn continuous_dependence_experiment(
    phi1_0: &ScalarField,
    phi2_0: &ScalarField,
    t_end: f64,
    cfg: &StepperConfig,
    p: &PotentialParams,
    spec: &MobilitySpec,
    every: usize,
) -> Result<ContinuityReport> {
    crate::grid::same_grid(phi1_0.grid(), phi2_0.grid())?;
    let dm = (phi1_0.mean() - phi2_0.mean()).abs();
    if dm > 1e-12 {
        return Err(Error::NonZeroMean { mean: dm });
    }
    if cfg.adaptive.is_some() {
        return Err(Error::InvalidParameter(
            "continuous dependence needs a fixed time step so that output times align".into(),
        ));
    }
    if spec.is_degenerate() {
        return Err(Error::Refused(
            "the weighted dual norm needs a non-degenerate mobility".into(),
        ));
    }
    let every = every.max(1);
    let (a, b) = std::thread::scope(|s| {
        let h1 = s.spawn(|| trajectory_snapshots(phi1_0, t_end, every, cfg, p, spec));
        let h2 = s.spawn(|| trajectory_snapshots(phi2_0, t_end, every, cfg, p, spec));
        (h1.join(), h2.join())
    });
    let a = a.map_err(|_| Error::Precondition("trajectory thread panicked".into()))??;
    let b = b.map_err(|_| Error::Precondition("trajectory thread panicked".into()))??;

    let grid = *phi1_0.grid();
    let sp = NeumannSpectral::new(grid);
    let mut ws = EllipticWorkspace::new(grid);
    let (bm, bmx) = (spec.b_min(), spec.b_max());
    let mut report = ContinuityReport {
        t: Vec::new(),
        d: Vec::new(),
        d_swapped: Vec::new(),
        hm1: Vec::new(),
        c_emp: None,
        sandwich_holds: true,
    };
    for ((t, p1), (_, p2)) in a.iter().zip(&b) {
        let diff = p1.sub(p2)?.zero_mean();
        let d = weighted_dual_norm_faces(&spec.face_mobility(p1)?, &diff, &mut ws)?;
        let ds = weighted_dual_norm_faces(&spec.face_mobility(p2)?, &diff, &mut ws)?;
        let h = hm1_norm_with(&sp, &diff)?;
        let slack = 1e-9 * h.max(f64::MIN_POSITIVE);
        if bm.sqrt() * d > h + slack || h > bmx.sqrt() * d + slack {
            report.sandwich_holds = false;
        }
        report.t.push(*t);
        report.d.push(d);
        report.d_swapped.push(ds);
        report.hm1.push(h);
    }
    let d0 = report.d[0];
    if d0 > 0.0 {
        report.c_emp = Some(report.d.iter().map(|d| d / d0).fold(0.0, f64::max));
    }
    Ok(report)
}
