//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on invalid input or a failed check, 2 on a
//! numerical failure (non-finite values, solver breakdown, no convergence).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::checks::{run_checks, CheckMode};
use crate::config::{parse_config, RunConfig};
use crate::diagnostics::{continuous_dependence_experiment, RunLedger};
use crate::error::{Error, Result};
use crate::init::perturbation;
use crate::io::{write_ledger_csv, write_pgm, write_snapshot};
use crate::lab::suite::run_suite;
use crate::steady::{omega_limit_monitor, solve_stationary};
use crate::stepper::{run, SimState, StepHook, StepStats};

#[derive(Debug, Parser)]
#[command(
    name = "chflow",
    version,
    about = "Cahn-Hilliard solver with logarithmic potential and concentration-dependent mobility"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a configuration to run.t_end, writing ledger and snapshots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Integrate until stationary and report the limit state.
    Steady {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evolve the configured datum and a perturbed copy; report the weighted
    /// distance over time.
    Uniqueness {
        #[arg(long)]
        config: PathBuf,
        /// Maximum modulus of the zero-mean perturbation.
        #[arg(long)]
        eps: f64,
        /// Output cadence in steps.
        #[arg(long, default_value_t = 10)]
        every: usize,
    },
    /// Run a suite of sampled inequality and ODE-bound checks.
    Lab {
        /// gronwall, uniform, blowup, gn, h2bb or all.
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the acceptance checks and print a pass/fail table.
    Check {
        /// Reduced problem sizes.
        #[arg(long)]
        quick: bool,
        /// Directory for the ledgers of the time-dependent runs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn load(path: &Path) -> Result<RunConfig> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    let cfg = parse_config(&text)?;
    cfg.check_paths()?;
    Ok(cfg)
}

fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Simulate { config } => simulate(&load(&config)?),
        Command::Steady { config } => steady(&load(&config)?),
        Command::Uniqueness { config, eps, every } => uniqueness(&load(&config)?, eps, every),
        Command::Lab { suite, seed } => {
            let out = run_suite(&suite, seed)?;
            print!("{}", out.report);
            Ok(out.passed)
        }
        Command::Check { quick, out } => {
            let mode = if quick { CheckMode::Quick } else { CheckMode::Full };
            let report = run_checks(mode)?;
            for r in &report.results {
                println!("{r}");
            }
            if let Some(dir) = out {
                report.write_ledgers(&dir)?;
            }
            let passed = report.all_passed();
            println!(
                "{} of {} criteria passed",
                report.results.iter().filter(|r| r.passed).count(),
                report.results.len()
            );
            Ok(passed)
        }
    }
}

fn seeded(cfg: &RunConfig, mut ledger: RunLedger) -> RunLedger {
    if cfg.init.is_random() {
        ledger.seed = Some(cfg.init.seed);
    }
    ledger
}

fn save_state(cfg: &RunConfig, dir: &Path, name: &str, state: &SimState) -> Result<()> {
    write_snapshot(&state.phi, state.t, &dir.join(format!("{name}.chfld")))?;
    if cfg.output.images {
        write_pgm(&state.phi, &dir.join(format!("{name}.pgm")))?;
    }
    Ok(())
}

fn simulate(cfg: &RunConfig) -> Result<bool> {
    let phi0 = cfg.init.build(cfg.grid)?;
    let out = &cfg.output;
    let mut hook = |state: &SimState, _: &StepStats, _: &RunLedger| -> Result<()> {
        if let Some(dir) = &out.snapshot_dir {
            if out.snapshot_every > 0 && state.step.is_multiple_of(out.snapshot_every) {
                save_state(cfg, dir, &format!("step_{:08}", state.step), state)?;
            }
        }
        Ok(())
    };
    let hook: &mut StepHook<'_> = &mut hook;
    let (state, ledger) = run(
        &phi0,
        cfg.t_end,
        &cfg.stepper,
        &cfg.potential,
        &cfg.mobility,
        Some(hook),
    )?;
    let ledger = seeded(cfg, ledger);
    if let Some(path) = &out.ledger {
        write_ledger_csv(&ledger, path)?;
    }
    if let Some(dir) = &out.snapshot_dir {
        save_state(cfg, dir, "final", &state)?;
    }
    let first = &ledger.rows[0];
    let last = ledger.last().expect("ledger has the initial row");
    println!("steps {}  t {}", state.step, state.t);
    println!("energy {:.12e} -> {:.12e}", first.e, last.e);
    println!("max mass drift {:.3e}", ledger.max_mass_drift());
    println!("max energy increase per step {:.3e}", ledger.max_energy_increase());
    println!("separation margin {:.6e}", last.sep);
    Ok(true)
}

fn steady(cfg: &RunConfig) -> Result<bool> {
    let phi0 = cfg.init.build(cfg.grid)?;
    let out = solve_stationary(phi0.mean(), &phi0, &cfg.steady, &cfg.potential, &cfg.mobility)?;
    let ledger = seeded(cfg, out.ledger.clone());
    if let Some(path) = &cfg.output.ledger {
        write_ledger_csv(&ledger, path)?;
    }
    if let Some(dir) = &cfg.output.snapshot_dir {
        let state = SimState::new(out.phi.clone(), &cfg.potential)?;
        save_state(cfg, dir, "steady", &SimState { t: out.t, ..state })?;
    }
    println!("converged {}", out.converged);
    println!("t {}", out.t);
    println!("stationarity residual {:.3e}", out.residual);
    println!("|grad mu| {:.3e}", out.grad_mu);
    println!("energy {:.12e}", out.energy);
    println!("newton polish applied {}", out.polished);
    match omega_limit_monitor(&out.ledger, &out.snapshots, 10) {
        Ok(o) => println!(
            "trend {:?} (|grad mu| {:.3e} -> {:.3e})",
            o.verdict, o.grad_mu_start, o.grad_mu_end
        ),
        Err(e) => println!("trend unavailable: {e}"),
    }
    if out.converged {
        Ok(true)
    } else {
        Err(Error::NotConverged {
            solver: "stationary solve",
            iterations: out.ledger.len(),
            residual: out.residual,
        })
    }
}

fn uniqueness(cfg: &RunConfig, eps: f64, every: usize) -> Result<bool> {
    let phi1 = cfg.init.build(cfg.grid)?;
    let phi2 = phi1.axpy(1.0, &perturbation(cfg.grid, eps, cfg.init.seed)?)?;
    if phi2.max_abs() >= 1.0 {
        return Err(Error::InvalidParameter(
            "perturbed datum leaves (-1, 1); reduce eps".into(),
        ));
    }
    let rep = continuous_dependence_experiment(
        &phi1,
        &phi2,
        cfg.t_end,
        &cfg.stepper,
        &cfg.potential,
        &cfg.mobility,
        every,
    )?;
    println!("t,d,d_swapped,hm1");
    for i in 0..rep.t.len() {
        println!(
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            rep.t[i], rep.d[i], rep.d_swapped[i], rep.hm1[i]
        );
    }
    println!("d(0) {:.12e}", rep.d0());
    println!("d(T) {:.12e}", rep.d_end());
    match rep.c_emp {
        Some(c) => println!("C_emp {c:.12e}"),
        None => println!("C_emp undefined (d(0) = 0)"),
    }
    println!("norm sandwich held at every output time: {}", rep.sandwich_holds);
    Ok(true)
}
