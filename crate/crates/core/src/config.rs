//! Run configuration in a flat `section.key = value` text format.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! ignored, as is anything after a `#` in a value. Every key is optional and
//! falls back to the default listed in [`KEYS`]. Unknown or repeated keys are
//! errors. Parsing reports every problem found, not just the first.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::{make_grid, Grid, ScalarField};
use crate::init;
use crate::io::read_snapshot;
use crate::steady::{SteadyConfig, SteadyMethod};
use crate::stepper::{AdaptiveConfig, StepperConfig};
use crate::thermo::{MobilitySpec, PotentialParams};

/// Recognized keys with their defaults.
pub const KEYS: &[(&str, &str)] = &[
    ("grid.nx", "64"),
    ("grid.ny", "64"),
    ("grid.lx", "1"),
    ("grid.ly", "1"),
    ("potential.theta", "1"),
    ("potential.theta0", "2"),
    ("mobility.form", "constant"),
    ("mobility.m0", "1"),
    ("mobility.coeffs", ""),
    ("mobility.b_min", ""),
    ("mobility.b_max", ""),
    ("init.kind", "noise"),
    ("init.mean", "0"),
    ("init.amplitude", "0.05"),
    ("init.seed", "0"),
    ("init.modes", "2"),
    ("init.width", "0.05"),
    ("init.k", "1"),
    ("init.path", ""),
    ("stepper.dt", "1e-4"),
    ("stepper.newton_tol", "1e-10"),
    ("stepper.newton_max", "30"),
    ("stepper.theta_stab", "0"),
    ("stepper.linear_rtol", "1e-6"),
    ("stepper.linear_max_iter", "500"),
    ("stepper.adaptive", "false"),
    ("stepper.dt_min", "1e-8"),
    ("stepper.dt_max", "0.1"),
    ("stepper.shrink", "0.5"),
    ("stepper.grow", "1.5"),
    ("run.t_end", "0.1"),
    ("output.ledger", ""),
    ("output.snapshot_every", "0"),
    ("output.snapshot_dir", ""),
    ("output.images", "false"),
    ("steady.tol_residual", "1e-9"),
    ("steady.tol_gradmu", "1e-8"),
    ("steady.max_time", "100"),
    ("steady.method", "long_time"),
];

/// Initial datum.
#[derive(Debug, Clone, PartialEq)]
pub enum InitKind {
    /// Mean plus uniform cellwise noise.
    Noise,
    /// Mean plus a random cosine series with `modes` modes per axis.
    BandLimited {
        modes: usize,
    },
    TanhStripe {
        width: f64,
    },
    Checkerboard {
        k: usize,
    },
    /// A `CHFLD v1` snapshot on the configured grid.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitSpec {
    pub kind: InitKind,
    pub mean: f64,
    pub amplitude: f64,
    pub seed: u64,
}

impl InitSpec {
    /// Whether the datum depends on the seed.
    pub fn is_random(&self) -> bool {
        matches!(self.kind, InitKind::Noise | InitKind::BandLimited { .. })
    }

    /// Build the datum on `grid`.
    pub fn build(&self, grid: Grid) -> Result<ScalarField> {
        match &self.kind {
            InitKind::Noise => init::noise(grid, self.mean, self.amplitude, self.seed),
            InitKind::BandLimited { modes } => init::band_limited(grid, self.mean, self.amplitude, *modes, self.seed),
            InitKind::TanhStripe { width } => init::tanh_stripe(grid, self.mean, self.amplitude, *width),
            InitKind::Checkerboard { k } => init::checkerboard(grid, self.mean, self.amplitude, *k),
            InitKind::File(path) => {
                let (phi, _) = read_snapshot(path)?;
                if *phi.grid() != grid {
                    return Err(Error::GridMismatch);
                }
                Ok(phi)
            }
        }
    }
}

/// Output settings.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub ledger: Option<PathBuf>,
    /// Snapshot every this many steps; 0 disables snapshots.
    pub snapshot_every: usize,
    pub snapshot_dir: Option<PathBuf>,
    /// Write a PGM image next to each snapshot.
    pub images: bool,
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: Grid,
    pub potential: PotentialParams,
    pub mobility: MobilitySpec,
    pub init: InitSpec,
    pub stepper: StepperConfig,
    pub t_end: f64,
    pub output: OutputSpec,
    pub steady: SteadyConfig,
}

impl RunConfig {
    /// Check that referenced input files exist and output locations can be
    /// created; all problems are reported together.
    pub fn check_paths(&self) -> Result<()> {
        let mut bad = Vec::new();
        if let InitKind::File(p) = &self.init.kind {
            if !p.is_file() {
                bad.push(format!("init.path: {} is not a readable file", p.display()));
            }
        }
        if let Some(p) = &self.output.ledger {
            let parent = p.parent().filter(|d| !d.as_os_str().is_empty());
            if let Some(d) = parent {
                if let Err(e) = std::fs::create_dir_all(d) {
                    bad.push(format!("output.ledger: cannot create {}: {e}", d.display()));
                }
            }
            if p.is_dir() {
                bad.push(format!("output.ledger: {} is a directory", p.display()));
            }
        }
        if let Some(d) = &self.output.snapshot_dir {
            if let Err(e) = std::fs::create_dir_all(d) {
                bad.push(format!("output.snapshot_dir: cannot create {}: {e}", d.display()));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }
}

struct Reader {
    values: BTreeMap<String, (String, usize)>,
    errors: Vec<String>,
}

impl Reader {
    fn raw(&self, key: &str) -> String {
        match self.values.get(key) {
            Some((v, _)) => v.clone(),
            None => KEYS.iter().find(|(k, _)| *k == key).expect("known key").1.to_string(),
        }
    }

    fn whence(&self, key: &str) -> String {
        match self.values.get(key) {
            Some((_, line)) => format!("line {line}: {key}"),
            None => key.to_string(),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        let raw = self.raw(key);
        match raw.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                let w = self.whence(key);
                self.errors.push(format!("{w}: expected {what}, got '{raw}'"));
                None
            }
        }
    }

    fn f64(&mut self, key: &str) -> Option<f64> {
        let v: f64 = self.parse(key, "a real number")?;
        if v.is_finite() {
            Some(v)
        } else {
            let w = self.whence(key);
            self.errors.push(format!("{w}: must be finite"));
            None
        }
    }

    fn opt_f64(&mut self, key: &str) -> Option<Option<f64>> {
        if self.raw(key).is_empty() {
            Some(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    fn usize(&mut self, key: &str) -> Option<usize> {
        self.parse(key, "a non-negative integer")
    }

    fn bool(&mut self, key: &str) -> Option<bool> {
        self.parse(key, "true or false")
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        let raw = self.raw(key);
        (!raw.is_empty()).then(|| PathBuf::from(raw))
    }

    fn fail(&mut self, key: &str, msg: impl std::fmt::Display) {
        let w = self.whence(key);
        self.errors.push(format!("{w}: {msg}"));
    }
}

/// Parse and validate configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut r = Reader {
        values: BTreeMap::new(),
        errors: Vec::new(),
    };
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            r.errors
                .push(format!("line {line_no}: expected 'key = value', got '{content}'"));
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.iter().any(|(known, _)| *known == k) {
            r.errors.push(format!("line {line_no}: unknown key '{k}'"));
        } else if let Some((_, first)) = r.values.get(k) {
            r.errors.push(format!("line {line_no}: key '{k}' repeats line {first}"));
        } else {
            r.values.insert(k.to_string(), (v.to_string(), line_no));
        }
    }

    let grid = match (
        r.usize("grid.nx"),
        r.usize("grid.ny"),
        r.f64("grid.lx"),
        r.f64("grid.ly"),
    ) {
        (Some(nx), Some(ny), Some(lx), Some(ly)) => match make_grid(nx, ny, lx, ly) {
            Ok(g) => Some(g),
            Err(e) => {
                r.fail("grid", e);
                None
            }
        },
        _ => None,
    };

    let potential = match (r.f64("potential.theta"), r.f64("potential.theta0")) {
        (Some(th), Some(th0)) => {
            if !(th > 0.0) {
                r.fail("potential.theta", "theta must be positive");
                None
            } else if !(th0 > th) {
                r.fail("potential.theta0", "theta0 must exceed theta");
                None
            } else {
                PotentialParams::new(th, th0).map_err(|e| r.fail("potential", e)).ok()
            }
        }
        _ => None,
    };

    let mobility = {
        let form = r.raw("mobility.form");
        let m0 = r.f64("mobility.m0");
        let bmin = r.opt_f64("mobility.b_min");
        let bmax = r.opt_f64("mobility.b_max");
        let coeffs: Option<Vec<f64>> = {
            let raw = r.raw("mobility.coeffs");
            if raw.is_empty() {
                Some(Vec::new())
            } else {
                match raw
                    .split(',')
                    .map(|c| c.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                {
                    Ok(c) => Some(c),
                    Err(_) => {
                        r.fail(
                            "mobility.coeffs",
                            format!("expected comma-separated reals, got '{raw}'"),
                        );
                        None
                    }
                }
            }
        };
        let built = match form.as_str() {
            "constant" => m0.map(MobilitySpec::constant),
            "degenerate" => m0.map(MobilitySpec::degenerate),
            "polynomial" => match (coeffs, bmin, bmax) {
                (Some(c), _, _) if c.is_empty() => {
                    r.fail("mobility.coeffs", "polynomial mobility needs coefficients");
                    None
                }
                (Some(c), Some(Some(lo)), Some(Some(hi))) => Some(MobilitySpec::polynomial(c, lo, hi)),
                (Some(c), Some(None), Some(None)) => Some(MobilitySpec::polynomial_sampled(c)),
                (Some(_), Some(_), Some(_)) => {
                    r.fail("mobility.b_min", "declare both b_min and b_max, or neither");
                    None
                }
                _ => None,
            },
            other => {
                r.fail(
                    "mobility.form",
                    format!("expected constant, polynomial or degenerate, got '{other}'"),
                );
                None
            }
        };
        match built {
            Some(Ok(m)) => Some(m),
            Some(Err(e)) => {
                r.fail("mobility", e);
                None
            }
            None => None,
        }
    };

    let init = {
        let mean = r.f64("init.mean");
        let amplitude = r.f64("init.amplitude");
        let seed: Option<u64> = r.parse("init.seed", "a non-negative integer");
        if let Some(m) = mean {
            if !(m > -1.0 && m < 1.0) {
                r.fail("init.mean", "mean must lie in (-1, 1)");
            }
        }
        let kind = match r.raw("init.kind").as_str() {
            "noise" => Some(InitKind::Noise),
            "band_limited" => r.usize("init.modes").map(|modes| InitKind::BandLimited { modes }),
            "tanh_stripe" => r.f64("init.width").map(|width| InitKind::TanhStripe { width }),
            "checkerboard" => r.usize("init.k").map(|k| InitKind::Checkerboard { k }),
            "file" => match r.path("init.path") {
                Some(p) => Some(InitKind::File(p)),
                None => {
                    r.fail("init.path", "init.kind = file needs a path");
                    None
                }
            },
            other => {
                r.fail(
                    "init.kind",
                    format!("expected noise, band_limited, tanh_stripe, checkerboard or file, got '{other}'"),
                );
                None
            }
        };
        match (kind, mean, amplitude, seed) {
            (Some(kind), Some(mean), Some(amplitude), Some(seed)) if mean.abs() < 1.0 => Some(InitSpec {
                kind,
                mean,
                amplitude,
                seed,
            }),
            _ => None,
        }
    };

    let stepper = {
        let adaptive = match (
            r.bool("stepper.adaptive"),
            r.f64("stepper.dt_min"),
            r.f64("stepper.dt_max"),
            r.f64("stepper.shrink"),
            r.f64("stepper.grow"),
        ) {
            (Some(on), Some(dt_min), Some(dt_max), Some(shrink), Some(grow)) => Some(on.then_some(AdaptiveConfig {
                dt_min,
                dt_max,
                shrink,
                grow,
            })),
            _ => None,
        };
        let cfg = (|| {
            Some(StepperConfig {
                dt: r.f64("stepper.dt")?,
                newton_tol: r.f64("stepper.newton_tol")?,
                newton_max: r.usize("stepper.newton_max")?,
                theta_stab: r.f64("stepper.theta_stab")?,
                linear_rtol: r.f64("stepper.linear_rtol")?,
                linear_max_iter: r.usize("stepper.linear_max_iter")?,
                adaptive: adaptive?,
            })
        })();
        match cfg.map(|c| (c.validate(), c)) {
            Some((Ok(()), c)) => Some(c),
            Some((Err(e), _)) => {
                r.fail("stepper", e);
                None
            }
            None => None,
        }
    };

    let t_end = r.f64("run.t_end");
    if let Some(t) = t_end {
        if !(t > 0.0) {
            r.fail("run.t_end", "end time must be positive");
        }
    }

    let output = (|| {
        Some(OutputSpec {
            ledger: r.path("output.ledger"),
            snapshot_every: r.usize("output.snapshot_every")?,
            snapshot_dir: r.path("output.snapshot_dir"),
            images: r.bool("output.images")?,
        })
    })();
    if let Some(o) = &output {
        if o.snapshot_every > 0 && o.snapshot_dir.is_none() {
            r.fail("output.snapshot_dir", "snapshots requested but no directory given");
        }
    }

    let method = match r.raw("steady.method").as_str() {
        "long_time" => Some(SteadyMethod::LongTimeIntegration),
        "damped_newton" => Some(SteadyMethod::DampedNewton),
        other => {
            r.fail(
                "steady.method",
                format!("expected long_time or damped_newton, got '{other}'"),
            );
            None
        }
    };
    let steady = match (
        r.f64("steady.tol_residual"),
        r.f64("steady.tol_gradmu"),
        r.f64("steady.max_time"),
        method,
        stepper,
    ) {
        (Some(tol_residual), Some(tol_gradmu), Some(max_time), Some(method), Some(st)) => {
            // long-time integration always runs adaptively
            let mut sst = st;
            if sst.adaptive.is_none() {
                let a = AdaptiveConfig::default();
                sst.adaptive = Some(AdaptiveConfig {
                    dt_min: a.dt_min.min(st.dt),
                    dt_max: a.dt_max.max(st.dt),
                    ..a
                });
            }
            let cfg = SteadyConfig {
                tol_residual,
                tol_gradmu,
                max_time,
                method,
                stepper: sst,
            };
            match cfg.validate() {
                Ok(()) => Some(cfg),
                Err(e) => {
                    r.fail("steady", e);
                    None
                }
            }
        }
        _ => None,
    };

    if !r.errors.is_empty() {
        return Err(Error::Config(r.errors));
    }
    match (grid, potential, mobility, init, stepper, t_end, output, steady) {
        (
            Some(grid),
            Some(potential),
            Some(mobility),
            Some(init),
            Some(stepper),
            Some(t_end),
            Some(output),
            Some(steady),
        ) => Ok(RunConfig {
            grid,
            potential,
            mobility,
            init,
            stepper,
            t_end,
            output,
            steady,
        }),
        _ => Err(Error::Config(vec!["configuration is incomplete".into()])),
    }
}
