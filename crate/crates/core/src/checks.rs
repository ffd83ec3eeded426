//! Acceptance checks: reproducible experiments that each end in a pass/fail
//! verdict with a one-line detail.
//!
//! The reference benchmark is `Θ = 1`, `Θ0 = 2`, mean `0`, unit square,
//! `b(s) = 1 + s/2`, started from a random low-mode cosine series (two modes
//! per axis, amplitude 0.05). Quick mode shrinks grids and horizons so that
//! the whole table runs in seconds; it is meant for smoke and determinism
//! runs, not for the quantitative thresholds.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::diagnostics::{continuous_dependence_experiment, energy_balance_defect, separation_margin, RunLedger};
use crate::elliptic::{
    dense_weighted_solve, hm1_norm_with, solve_g_with, solve_gq, weighted_dual_norm, EllipticWorkspace,
};
use crate::error::Result;
use crate::grid::{make_grid, Grid, ScalarField};
use crate::init;
use crate::io::{ledger_csv, write_ledger_csv};
use crate::lab::blowup::bb_ode_comparison;
use crate::lab::fields::RandomFieldSpec;
use crate::lab::gn::gn_inequality_sweep;
use crate::lab::gronwall::{power_sweep, uniform_sweep, OdeVariant};
use crate::rng::purpose;
use crate::spectral::{neumann_eigenvalues, NeumannSpectral};
use crate::steady::stationarity_residual;
use crate::stepper::{run, run_with, AdaptiveConfig, SimState, Stepper, StepperConfig};
use crate::thermo::{MobilitySpec, PotentialParams};

/// Ledgers keyed by file stem.
pub type NamedLedgers = Vec<(String, RunLedger)>;

/// Seed of the benchmark initial datum and of all sampled checks.
pub const BENCH_SEED: u64 = 1;

/// Problem size of a check run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    Full,
    Quick,
}

/// Verdict of one acceptance criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{v}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

/// Verdicts plus the ledgers of the time-dependent runs, by file stem.
#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub results: Vec<CriterionResult>,
    pub ledgers: NamedLedgers,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    /// Write every ledger as `<dir>/<stem>.csv` (with seed sidecar).
    pub fn write_ledgers(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (stem, ledger) in &self.ledgers {
            write_ledger_csv(ledger, &dir.join(format!("{stem}.csv")))?;
        }
        Ok(())
    }
}

/// Benchmark potential `Θ = 1`, `Θ0 = 2`.
pub fn bench_potential() -> PotentialParams {
    PotentialParams::new(1.0, 2.0).expect("valid benchmark potential")
}

/// Benchmark mobility `b(s) = 1 + s/2` on `[1/2, 3/2]`.
pub fn bench_mobility() -> MobilitySpec {
    MobilitySpec::polynomial(vec![1.0, 0.5], 0.5, 1.5).expect("valid benchmark mobility")
}

/// Benchmark initial datum on an `n × n` unit-square grid.
pub fn bench_datum(n: usize) -> Result<ScalarField> {
    init::band_limited(make_grid(n, n, 1.0, 1.0)?, 0.0, 0.05, 2, BENCH_SEED)
}

fn bench_run(n: usize, t_end: f64, cfg: &StepperConfig) -> Result<(SimState, RunLedger)> {
    let (state, mut ledger) = run(
        &bench_datum(n)?,
        t_end,
        cfg,
        &bench_potential(),
        &bench_mobility(),
        None,
    )?;
    ledger.seed = Some(BENCH_SEED);
    Ok((state, ledger))
}

fn fixed(dt: f64) -> StepperConfig {
    StepperConfig {
        dt,
        ..Default::default()
    }
}

fn adaptive(dt: f64) -> StepperConfig {
    StepperConfig {
        dt,
        adaptive: Some(AdaptiveConfig::default()),
        ..Default::default()
    }
}

fn result(id: u8, name: &'static str, passed: bool, detail: String) -> CriterionResult {
    CriterionResult {
        id,
        name,
        passed,
        detail,
    }
}

/// Criteria 1 and 2 share the benchmark runs.
pub fn mass_and_energy(mode: CheckMode) -> Result<(CriterionResult, CriterionResult, NamedLedgers)> {
    let (n, dts): (usize, [f64; 3]) = match mode {
        CheckMode::Full => (128, [4e-4, 2e-4, 1e-4]),
        CheckMode::Quick => (32, [4e-4, 2e-4, 1e-4]),
    };
    let t_end = match mode {
        CheckMode::Full => 0.1,
        CheckMode::Quick => 0.02,
    };
    let runs: Vec<(f64, RunLedger, f64)> = dts
        .par_iter()
        .map(|&dt| {
            let start = Instant::now();
            let (_, ledger) = bench_run(n, t_end, &fixed(dt))?;
            Ok((dt, ledger, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let (_, fine, secs) = (&runs[2].0, &runs[2].1, runs[2].2);
    let drift = fine.rows.iter().map(|r| r.mass.abs()).fold(0.0, f64::max);
    let steps = fine.len() - 1;
    let c1 = result(
        1,
        "mass conservation",
        drift <= 1e-12 && secs < 60.0,
        format!(
            "{n}x{n}, dt {:e}, {steps} steps: max |mean - m| = {drift:.3e} (limit 1e-12), {secs:.1} s (limit 60 s)",
            dts[2]
        ),
    );
    let rise = runs
        .iter()
        .map(|r| r.1.max_energy_increase())
        .fold(f64::NEG_INFINITY, f64::max);
    let defects: Vec<f64> = runs
        .iter()
        .map(|r| energy_balance_defect(&r.1))
        .collect::<Result<_>>()?;
    let orders = [(defects[0] / defects[1]).log2(), (defects[1] / defects[2]).log2()];
    let c2 = result(
        2,
        "energy dissipation",
        rise <= 1e-9 && orders.iter().all(|o| *o >= 0.9),
        format!(
            "max step energy increase {rise:.3e} (limit 1e-9); balance defects {:.3e}, {:.3e}, {:.3e} at dt 4e-4, 2e-4, 1e-4; observed orders {:.3}, {:.3} (limit 0.9)",
            defects[0], defects[1], defects[2], orders[0], orders[1]
        ),
    );
    let ledgers = runs
        .into_iter()
        .map(|(dt, l, _)| (format!("spinodal_{n}_dt{dt:e}"), l))
        .collect();
    Ok((c1, c2, ledgers))
}

/// Criterion 3: spectral and PCG elliptic solvers against closed forms, dense
/// LU, and a manufactured solution.
pub fn elliptic_correctness(mode: CheckMode) -> Result<CriterionResult> {
    let pi = std::f64::consts::PI;
    // eigenmode of the spectral inverse
    let g = make_grid(32, 24, 1.0, 0.75)?;
    let sp = NeumannSpectral::new(g);
    let (k, l) = (3, 2);
    let kappa = neumann_eigenvalues(32, g.hx())[k] + neumann_eigenvalues(24, g.hy())[l];
    let f = ScalarField::from_fn(g, |x, y| (pi * k as f64 * x).cos() * (pi * l as f64 * y / 0.75).cos())?;
    let u = solve_g_with(&sp, &f)?;
    let eig_err = u
        .values()
        .iter()
        .zip(f.values())
        .map(|(a, b)| (a - b / kappa).abs())
        .fold(0.0, f64::max);

    // dense LU on 8 × 8
    let g8 = make_grid(8, 8, 1.0, 1.0)?;
    let spec = bench_mobility();
    let mut ws = EllipticWorkspace::with_tolerances(g8, 1e-14, 1000)?;
    let samples = RandomFieldSpec {
        seed: BENCH_SEED,
        band_limit: 8,
        amplitude: 0.3,
        zero_mean: false,
        purpose: purpose::ELLIPTIC_SAMPLES,
    };
    let mut lu_err: f64 = 0.0;
    for i in 0..20 {
        let q = samples.sample(g8, 2 * i)?;
        let q = q.scale(0.95 / q.max_abs().max(0.95));
        let f = samples.sample(g8, 2 * i + 1)?.zero_mean();
        let u = solve_gq(&q, &f, &spec, &mut ws)?;
        let dense = dense_weighted_solve(&spec.face_mobility(&q)?, &f)?;
        let scale = dense.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let e = u
            .values()
            .iter()
            .zip(&dense)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale;
        lu_err = lu_err.max(e);
    }

    // manufactured u = cos πx cos πy with q = 0.8 sin(πx/2) cos(πy/3)
    let sizes: &[usize] = match mode {
        CheckMode::Full => &[16, 32, 64],
        CheckMode::Quick => &[8, 16, 32],
    };
    let mut errs = Vec::new();
    for &n in sizes {
        let g = make_grid(n, n, 1.0, 1.0)?;
        let q = ScalarField::from_fn(g, |x, y| 0.8 * (0.5 * pi * x).sin() * (pi * y / 3.0).cos())?;
        let rhs = ScalarField::from_fn(g, |x, y| {
            let q = 0.8 * (0.5 * pi * x).sin() * (pi * y / 3.0).cos();
            let qx = 0.4 * pi * (0.5 * pi * x).cos() * (pi * y / 3.0).cos();
            let qy = -0.8 * pi / 3.0 * (0.5 * pi * x).sin() * (pi * y / 3.0).sin();
            let b = 1.0 + 0.5 * q;
            let ux = -pi * (pi * x).sin() * (pi * y).cos();
            let uy = -pi * (pi * x).cos() * (pi * y).sin();
            let lap = -2.0 * pi * pi * (pi * x).cos() * (pi * y).cos();
            -(b * lap + 0.5 * (qx * ux + qy * uy))
        })?
        .zero_mean();
        let exact = ScalarField::from_fn(g, |x, y| (pi * x).cos() * (pi * y).cos())?.zero_mean();
        let mut ws = EllipticWorkspace::with_tolerances(g, 1e-13, 2000)?;
        let u = solve_gq(&q, &rhs, &spec, &mut ws)?;
        errs.push(u.sub(&exact)?.norm_l2());
    }
    let orders = [(errs[0] / errs[1]).log2(), (errs[1] / errs[2]).log2()];
    Ok(result(
        3,
        "elliptic correctness",
        eig_err <= 1e-11 && lu_err <= 1e-9 && orders.iter().all(|o| *o >= 1.9),
        format!(
            "eigenmode max error {eig_err:.2e} (limit 1e-11); dense LU relative max error {lu_err:.2e} over 20 pairs (limit 1e-9); manufactured L2 errors {:.3e}, {:.3e}, {:.3e}, orders {:.3}, {:.3} (limit 1.9)",
            errs[0], errs[1], errs[2], orders[0], orders[1]
        ),
    ))
}

/// Criterion 4: `√b_m ‖·‖_q ≤ ‖∇G·‖ ≤ √b_M ‖·‖_q` on random pairs.
pub fn norm_equivalence(mode: CheckMode) -> Result<CriterionResult> {
    let (n, count) = match mode {
        CheckMode::Full => (64, 100u64),
        CheckMode::Quick => (16, 20),
    };
    let g = make_grid(n, n, 1.0, 1.0)?;
    let spec = bench_mobility();
    let start = Instant::now();
    let fields = RandomFieldSpec {
        seed: BENCH_SEED,
        band_limit: 12,
        amplitude: 1.0,
        zero_mean: false,
        purpose: purpose::ELLIPTIC_SAMPLES,
    };
    let sp = NeumannSpectral::new(g);
    let ws = EllipticWorkspace::with_tolerances(g, 1e-13, 2000)?;
    let (sb_m, sb_mx) = (spec.b_min().sqrt(), spec.b_max().sqrt());
    // worst relative violations of the lower and upper inequality
    let worst: Vec<(f64, f64)> = (0..count)
        .into_par_iter()
        .map_init(
            || ws.clone(),
            |ws, i| {
                let q = fields.sample(g, 1000 + 2 * i)?;
                let q = q.scale(0.99 / q.max_abs());
                let f = fields.sample(g, 1001 + 2 * i)?.zero_mean();
                let w = weighted_dual_norm(&q, &f, &spec, ws)?;
                let h = hm1_norm_with(&sp, &f)?;
                Ok(((sb_m * w - h) / h, (h - sb_mx * w) / h))
            },
        )
        .collect::<Result<_>>()?;
    let secs = start.elapsed().as_secs_f64();
    let lower = worst.iter().map(|w| w.0).fold(f64::NEG_INFINITY, f64::max);
    let upper = worst.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(result(
        4,
        "norm equivalence",
        lower <= 1e-9 && upper <= 1e-9 && secs < 30.0,
        format!(
            "{count} pairs at {n}x{n}: max (sqrt(b_m) |f|_q - |f|_-1)/|f|_-1 = {lower:.3e}, max (|f|_-1 - sqrt(b_M) |f|_q)/|f|_-1 = {upper:.3e} (limit 1e-9), {secs:.1} s (limit 30 s)"
        ),
    ))
}

/// Criterion 5: linear response of the weighted distance and stability of
/// the empirical continuity constant under time-step halving.
pub fn continuous_dependence(mode: CheckMode) -> Result<CriterionResult> {
    let (n, t_end, dt) = match mode {
        CheckMode::Full => (64, 0.5, 1e-3),
        CheckMode::Quick => (32, 0.05, 1e-3),
    };
    let phi1 = bench_datum(n)?;
    let (p, spec) = (bench_potential(), bench_mobility());
    let runs: Vec<(f64, f64, Option<f64>, Option<f64>)> = [(1e-4, dt), (5e-5, dt), (1e-4, dt / 2.0)]
        .par_iter()
        .map(|&(eps, dt)| {
            let phi2 = phi1.axpy(1.0, &init::perturbation(*phi1.grid(), eps, BENCH_SEED)?)?;
            let rep = continuous_dependence_experiment(&phi1, &phi2, t_end, &fixed(dt), &p, &spec, 10)?;
            Ok((eps, dt, rep.ratio_end(), rep.c_emp))
        })
        .collect::<Result<_>>()?;
    let finite = |v: Option<f64>| v.filter(|x| x.is_finite() && *x > 0.0);
    let (r1, r2) = (finite(runs[0].2), finite(runs[1].2));
    let (c1, c2) = (finite(runs[0].3), finite(runs[2].3));
    let lin = match (r1, r2) {
        (Some(a), Some(b)) => (a / b - 1.0).abs(),
        _ => f64::INFINITY,
    };
    let stab = match (c1, c2) {
        (Some(a), Some(b)) => (a / b - 1.0).abs(),
        _ => f64::INFINITY,
    };
    Ok(result(
        5,
        "continuous dependence",
        lin <= 0.1 && stab <= 0.1,
        format!(
            "{n}x{n}, T = {t_end}: d(T)/d(0) = {:.6e} (eps 1e-4), {:.6e} (eps 5e-5), relative gap {lin:.2e} (limit 0.1); C_emp = {:.6} (dt {dt:e}), {:.6} (dt {:e}), relative gap {stab:.2e} (limit 0.1)",
            r1.unwrap_or(f64::NAN),
            r2.unwrap_or(f64::NAN),
            c1.unwrap_or(f64::NAN),
            c2.unwrap_or(f64::NAN),
            dt / 2.0
        ),
    ))
}

/// Criterion 6: separation margin at `T = 5` on two resolutions.
pub fn separation(mode: CheckMode) -> Result<(CriterionResult, NamedLedgers)> {
    let (sizes, t_end) = match mode {
        CheckMode::Full => ([64, 128], 5.0),
        CheckMode::Quick => ([16, 32], 0.5),
    };
    let runs: Vec<(usize, f64, RunLedger)> = sizes
        .par_iter()
        .map(|&n| {
            let (state, ledger) = bench_run(n, t_end, &adaptive(1e-4))?;
            Ok((n, separation_margin(&state.phi), ledger))
        })
        .collect::<Result<_>>()?;
    let (a, b) = (runs[0].1, runs[1].1);
    let gap = (a - b).abs() / a.max(b);
    let c = result(
        6,
        "separation",
        a >= 1e-3 && b >= 1e-3 && gap <= 0.2,
        format!(
            "margin at T = {t_end}: {a:.6} ({}x{}), {b:.6} ({}x{}) (limit 1e-3); relative gap {gap:.2e} (limit 0.2)",
            sizes[0], sizes[0], sizes[1], sizes[1]
        ),
    );
    Ok((
        c,
        runs.into_iter()
            .map(|(n, _, l)| (format!("separation_{n}"), l))
            .collect(),
    ))
}

/// Criterion 7: long-time convergence to a stationary state.
pub fn equilibrium(mode: CheckMode) -> Result<(CriterionResult, NamedLedgers)> {
    let n = match mode {
        CheckMode::Full => 64,
        CheckMode::Quick => 16,
    };
    let (p, spec) = (bench_potential(), bench_mobility());
    let phi0 = bench_datum(n)?;
    let mut stepper = Stepper::new(*phi0.grid(), adaptive(1e-4), p, spec)?;
    let (state, mut ledger) = run_with(&mut stepper, SimState::new(phi0, &p)?, 50.0, None)?;
    ledger.seed = Some(BENCH_SEED);
    let grad_mu = ledger.last().map_or(f64::NAN, |r| r.grad_mu_sq.sqrt());
    let res = stationarity_residual(&state.phi, &p)?;
    let (next, _) = stepper.step_with(&state, stepper.dt())?;
    let fixed_point = next.phi.sub(&state.phi)?.norm_l2();
    let c = result(
        7,
        "convergence to equilibrium",
        grad_mu < 1e-8 && res <= 1e-6 && fixed_point <= 1e-8,
        format!(
            "{n}x{n}, T = 50, {} adaptive steps: |grad mu| = {grad_mu:.3e} (limit 1e-8), stationarity residual {res:.3e} (limit 1e-6), one-step change {fixed_point:.3e} at dt {:.3e} (limit 1e-8)",
            ledger.len() - 1,
            stepper.dt()
        ),
    );
    Ok((c, vec![(format!("equilibrium_{n}"), ledger)]))
}

/// Criterion 8: Gronwall bounds against brute-force ODE oracles.
pub fn gronwall_oracles() -> Result<CriterionResult> {
    let (a, _) = power_sweep(BENCH_SEED, 50, OdeVariant::FixedSigma)?;
    let (b, _) = power_sweep(BENCH_SEED, 50, OdeVariant::Saturated)?;
    let (c, _) = uniform_sweep(BENCH_SEED, 50)?;
    let ok = [&a, &b, &c].iter().all(|s| s.violations == 0 && s.inconsistent == 0);
    Ok(result(
        8,
        "Gronwall oracles",
        ok,
        format!(
            "violations {} / {} / {} (power fixed-exponent / power saturated / uniform, 50 each); worst RK4 self-consistency {:.2e} (limit 1e-6)",
            a.violations,
            b.violations,
            c.violations,
            a.worst_consistency.max(b.worst_consistency).max(c.worst_consistency)
        ),
    ))
}

/// Criterion 9: blow-up time of `B' = (K/ρ)B^{2(1+ρ)}` against `ρ`.
pub fn blowup_demonstration() -> Result<CriterionResult> {
    let rep = bb_ode_comparison(1.0, &[0.2, 0.1, 0.05], 1.0, 1.0)?;
    let lemma = rep.rows.iter().all(|r| r.lemma_holds && r.consistent);
    let times: Vec<String> = rep
        .rows
        .iter()
        .map(|r| format!("{:.6}", r.blowup_time.unwrap_or(f64::NAN)))
        .collect();
    Ok(result(
        9,
        "blow-up versus rho",
        rep.decreasing_in_rho && lemma,
        format!(
            "blow-up times {} for rho = 0.2, 0.1, 0.05 (strictly decreasing: {}); Gronwall bound holds on every pre-blow-up window: {lemma}",
            times.join(", "),
            rep.decreasing_in_rho
        ),
    ))
}

/// Criterion 10: no growth of the sampled GN ratio in `r`.
pub fn gn_scaling(mode: CheckMode) -> Result<CriterionResult> {
    let (n, count) = match mode {
        CheckMode::Full => (64, 100),
        CheckMode::Quick => (16, 20),
    };
    let spec = RandomFieldSpec {
        seed: BENCH_SEED,
        band_limit: 8,
        amplitude: 1.0,
        zero_mean: false,
        purpose: purpose::GN,
    };
    let rep = gn_inequality_sweep(
        &spec,
        &[2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
        make_grid(n, n, 1.0, 1.0)?,
        count,
    )?;
    let maxes: Vec<String> = rep.rows.iter().map(|r| format!("{:.4}", r.max_ratio)).collect();
    Ok(result(
        10,
        "GN sqrt(r) scaling",
        rep.no_growth,
        format!(
            "max ratios {} for r = 2..64 over {count} fields; slope {:.4} (limit 0.05)",
            maxes.join(", "),
            rep.slope
        ),
    ))
}

/// Criterion 11: two identical quick benchmark runs give byte-identical
/// ledgers.
pub fn determinism() -> Result<CriterionResult> {
    let once = || -> Result<String> {
        let (_, ledger) = bench_run(16, 0.01, &adaptive(1e-4))?;
        Ok(ledger_csv(&ledger))
    };
    let (a, b) = (once()?, once()?);
    Ok(result(
        11,
        "determinism",
        a == b,
        format!(
            "two runs produced {} and {} ledger bytes, identical: {}",
            a.len(),
            b.len(),
            a == b
        ),
    ))
}

/// Run every criterion in order.
pub fn run_checks(mode: CheckMode) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    let (c1, c2, l) = mass_and_energy(mode)?;
    report.results.extend([c1, c2]);
    report.ledgers.extend(l);
    report.results.push(elliptic_correctness(mode)?);
    report.results.push(norm_equivalence(mode)?);
    report.results.push(continuous_dependence(mode)?);
    let (c6, l) = separation(mode)?;
    report.results.push(c6);
    report.ledgers.extend(l);
    let (c7, l) = equilibrium(mode)?;
    report.results.push(c7);
    report.ledgers.extend(l);
    report.results.push(gronwall_oracles()?);
    report.results.push(blowup_demonstration()?);
    report.results.push(gn_scaling(mode)?);
    report.results.push(determinism()?);
    Ok(report)
}

/// Grid of the benchmark at resolution `n`.
pub fn bench_grid(n: usize) -> Result<Grid> {
    make_grid(n, n, 1.0, 1.0)
}
