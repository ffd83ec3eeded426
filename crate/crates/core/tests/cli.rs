//! End-to-end runs of the `chflow` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chflow::io::{read_ledger_csv, read_snapshot};

fn chflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chflow"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("chflow binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const DEMO: &str = "grid.nx = 16\ngrid.ny = 16\n\
    mobility.form = polynomial\nmobility.coeffs = 1, 0.5\nmobility.b_min = 0.5\nmobility.b_max = 1.5\n\
    init.kind = band_limited\ninit.seed = 3\nstepper.dt = 1e-3\nrun.t_end = 0.02\n";

const CHANNEL: &str = "grid.nx = 32\ngrid.ny = 4\ngrid.lx = 8\ngrid.ly = 1\n\
    mobility.form = polynomial\nmobility.coeffs = 1, 0.5\n\
    init.kind = band_limited\ninit.modes = 4\ninit.seed = 1\n";

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let help = chflow(dir.path(), &["--help"]);
    assert_eq!(help.status.code(), Some(0));
    for sub in ["simulate", "steady", "uniqueness", "lab", "check"] {
        assert!(stdout(&help).contains(sub), "help lacks {sub}");
    }
    assert_eq!(chflow(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        chflow(dir.path(), &["uniqueness", "--config", "x.cfg"]).status.code(),
        Some(1)
    );
}

#[test]
fn missing_and_invalid_configs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = chflow(dir.path(), &["simulate", "--config", "absent.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("absent.cfg"));

    fs::write(
        dir.path().join("bad.cfg"),
        "potential.theta0 = 1\ninit.mean = 1.0\nbogus = 2\n",
    )
    .unwrap();
    let o = chflow(dir.path(), &["simulate", "--config", "bad.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    for needle in ["theta0", "init.mean", "bogus"] {
        assert!(err.contains(needle), "stderr lacks {needle}: {err}");
    }
}

#[test]
fn simulate_writes_ledger_snapshots_and_images() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{DEMO}output.ledger = out/ledger.csv\noutput.snapshot_every = 5\noutput.snapshot_dir = out/snaps\noutput.images = true\n");
    fs::write(dir.path().join("demo.cfg"), cfg).unwrap();
    let o = chflow(dir.path(), &["simulate", "--config", "demo.cfg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("steps 20"));

    let out = dir.path().join("out");
    let ledger = read_ledger_csv(&out.join("ledger.csv")).unwrap();
    assert_eq!(ledger.len(), 21);
    assert_eq!(ledger.seed, Some(3));
    assert!(ledger.max_mass_drift() <= 1e-12 && ledger.max_energy_increase() <= 1e-9);
    for step in [5, 10, 15, 20] {
        let stem = out.join(format!("snaps/step_{step:08}"));
        let (phi, t) = read_snapshot(&stem.with_extension("chfld")).unwrap();
        assert!((t - 1e-3 * step as f64).abs() < 1e-12);
        assert_eq!(phi.grid().nx(), 16);
        assert!(stem.with_extension("pgm").is_file());
    }
    let (last, t) = read_snapshot(&out.join("snaps/final.chfld")).unwrap();
    assert!((t - 0.02).abs() < 1e-12);
    assert!((last.mean() - ledger.rows[0].mass).abs() < 1e-12);
}

#[test]
fn steady_reports_convergence_or_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ok.cfg"), format!("{CHANNEL}steady.max_time = 500\n")).unwrap();
    let o = chflow(dir.path(), &["steady", "--config", "ok.cfg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("converged true"), "{text}");
    assert!(text.contains("trend Converging"), "{text}");

    fs::write(
        dir.path().join("short.cfg"),
        format!("{CHANNEL}steady.max_time = 0.5\n"),
    )
    .unwrap();
    let o = chflow(dir.path(), &["steady", "--config", "short.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("converged false"));
}

#[test]
fn uniqueness_prints_the_distance_table() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("u.cfg"), DEMO).unwrap();
    let o = chflow(
        dir.path(),
        &["uniqueness", "--config", "u.cfg", "--eps", "1e-4", "--every", "5"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("t,d,d_swapped,hm1\n"));
    assert_eq!(
        text.lines().filter(|l| l.contains(',') && !l.starts_with('t')).count(),
        5
    );
    for needle in ["d(0) ", "d(T) ", "C_emp ", "sandwich held at every output time: true"] {
        assert!(text.contains(needle), "missing {needle}: {text}");
    }
    let o = chflow(dir.path(), &["uniqueness", "--config", "u.cfg", "--eps", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn lab_suites_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = chflow(dir.path(), &["lab", "--suite", "all", "--seed", "7"]);
    let b = chflow(dir.path(), &["lab", "--suite", "all", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(!stdout(&a).contains("FAIL"));
    let c = chflow(dir.path(), &["lab", "--suite", "gronwall", "--seed", "8"]);
    assert_ne!(
        stdout(&c),
        stdout(&chflow(dir.path(), &["lab", "--suite", "gronwall", "--seed", "7"]))
    );
    assert_eq!(chflow(dir.path(), &["lab", "--suite", "nope"]).status.code(), Some(1));
}

#[test]
fn quick_check_passes_and_writes_ledgers() {
    let dir = tempfile::tempdir().unwrap();
    let o = chflow(dir.path(), &["check", "--quick", "--out", "q"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 11);
    assert!(text.contains("11 of 11 criteria passed"));
    let csvs = fs::read_dir(dir.path().join("q"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert!(csvs > 0);
}
