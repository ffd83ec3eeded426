//! File formats: field snapshots, ledger CSV, and PGM images.
//!
//! Snapshot (`CHFLD v1`): one ASCII header line `CHFLD v1 nx ny lx ly t`
//! followed by `nx·ny` little-endian `f64` values in row-major order
//! (`j·nx + i`). The reals in the header are written in shortest round-trip
//! form, so read∘write is the identity bit for bit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::diagnostics::{LedgerRow, RunLedger};
use crate::error::{Error, Result};
use crate::grid::{make_grid, ScalarField};

/// Header row of the ledger CSV.
pub const LEDGER_HEADER: &str = "t,mass,E,E0,grad_mu_sq,Lambda,B,sep,mu_bar,cum_dissipation";

const MAGIC: &str = "CHFLD v1";

/// Snapshot bytes of `phi` at time `t`.
pub fn encode_snapshot(phi: &ScalarField, t: f64) -> Vec<u8> {
    let g = phi.grid();
    let mut out = format!("{MAGIC} {} {} {:?} {:?} {:?}\n", g.nx(), g.ny(), g.lx(), g.ly(), t).into_bytes();
    out.reserve(8 * g.len());
    for v in phi.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parse snapshot bytes into the field and its time.
pub fn decode_snapshot(bytes: &[u8]) -> Result<(ScalarField, f64)> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("snapshot header is not terminated".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Format("snapshot header is not UTF-8".into()))?;
    let rest = header
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::Format(format!("bad snapshot magic in '{header}'")))?;
    let parts: Vec<&str> = rest.split_whitespace().collect();
    if parts.len() != 5 {
        return Err(Error::Format(format!(
            "snapshot header needs nx ny lx ly t, got '{header}'"
        )));
    }
    let bad = |what: &str| Error::Format(format!("malformed {what} in snapshot header '{header}'"));
    let nx: usize = parts[0].parse().map_err(|_| bad("nx"))?;
    let ny: usize = parts[1].parse().map_err(|_| bad("ny"))?;
    let lx: f64 = parts[2].parse().map_err(|_| bad("lx"))?;
    let ly: f64 = parts[3].parse().map_err(|_| bad("ly"))?;
    let t: f64 = parts[4].parse().map_err(|_| bad("t"))?;
    let grid = make_grid(nx, ny, lx, ly).map_err(|e| Error::Format(format!("snapshot grid: {e}")))?;
    let payload = &bytes[nl + 1..];
    if payload.len() != 8 * grid.len() {
        return Err(Error::Format(format!(
            "snapshot size mismatch: header needs {} bytes of data, found {}",
            8 * grid.len(),
            payload.len()
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of eight bytes")))
        .collect();
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Format(format!("snapshot value {k} is not finite")));
    }
    if !t.is_finite() {
        return Err(Error::Format("snapshot time is not finite".into()));
    }
    Ok((ScalarField::new(grid, values)?, t))
}

/// Write a `CHFLD v1` snapshot.
pub fn write_snapshot(phi: &ScalarField, t: f64, path: &Path) -> Result<()> {
    fs::write(path, encode_snapshot(phi, t))?;
    Ok(())
}

/// Read a `CHFLD v1` snapshot.
pub fn read_snapshot(path: &Path) -> Result<(ScalarField, f64)> {
    decode_snapshot(&fs::read(path)?)
}

/// Ledger CSV text with 17 significant digits per value.
pub fn ledger_csv(ledger: &RunLedger) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::with_capacity(250 * (ledger.len() + 1)));
    // writing to memory cannot fail
    w.write_record(LEDGER_HEADER.split(',')).expect("in-memory write");
    for row in &ledger.rows {
        w.write_record(row.values().iter().map(|v| format!("{v:.16e}")))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

/// Path of the metadata sidecar of a ledger: `<path>.meta`.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".meta");
    PathBuf::from(p)
}

/// Write the ledger CSV and, if the ledger carries a seed, a `<path>.meta`
/// sidecar holding `seed=<seed>`.
pub fn write_ledger_csv(ledger: &RunLedger, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(ledger_csv(ledger).as_bytes())?;
    if let Some(seed) = ledger.seed {
        fs::write(meta_path(path), format!("seed={seed}\n"))?;
    }
    Ok(())
}

/// Parse ledger CSV text.
pub fn parse_ledger_csv(text: &str) -> Result<RunLedger> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Format(format!("ledger header: {e}")))?;
    if header.iter().collect::<Vec<_>>().join(",") != LEDGER_HEADER {
        return Err(Error::Format(format!("unexpected ledger header {header:?}")));
    }
    let mut ledger = RunLedger::default();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("ledger line {}: {e}", n + 2)))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("ledger line {}: {e}", n + 2)))?;
        let arr: [f64; 10] = vals
            .try_into()
            .map_err(|_| Error::Format(format!("ledger line {} needs 10 columns", n + 2)))?;
        ledger.push(LedgerRow::from_values(arr));
    }
    Ok(ledger)
}

/// Read a ledger CSV and its optional seed sidecar.
pub fn read_ledger_csv(path: &Path) -> Result<RunLedger> {
    let mut ledger = parse_ledger_csv(&fs::read_to_string(path)?)?;
    if let Ok(meta) = fs::read_to_string(meta_path(path)) {
        for line in meta.lines() {
            if let Some(v) = line.strip_prefix("seed=") {
                ledger.seed = Some(
                    v.trim()
                        .parse()
                        .map_err(|_| Error::Format(format!("bad seed line '{line}'")))?,
                );
            }
        }
    }
    Ok(ledger)
}

/// Gray level of `φ`: `floor(127.5 + 127.5 φ)` clamped to `0..=255`.
pub fn gray_level(phi: f64) -> u8 {
    (127.5 + 127.5 * phi).floor().clamp(0.0, 255.0) as u8
}

/// Binary PGM (P5) bytes; the first image row is the top row `j = ny - 1`.
pub fn encode_pgm(phi: &ScalarField) -> Vec<u8> {
    let g = phi.grid();
    let mut out = format!("P5\n{} {}\n255\n", g.nx(), g.ny()).into_bytes();
    for j in (0..g.ny()).rev() {
        out.extend((0..g.nx()).map(|i| gray_level(phi.get(i, j))));
    }
    out
}

/// Write a binary PGM image of `phi`.
pub fn write_pgm(phi: &ScalarField, path: &Path) -> Result<()> {
    fs::write(path, encode_pgm(phi))?;
    Ok(())
}
