//! Acceptance table: runs the `check` subcommand twice in separate processes,
//! prints one pass/fail line per criterion, and compares the ledgers written
//! by the two runs byte for byte. Built without the libtest harness so that
//! the table is always shown.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

const CRITERIA: u8 = 11;

fn run_check(out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_chflow"))
        .arg("check")
        .arg("--out")
        .arg(out)
        .output()
        .expect("chflow binary runs");
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8(o.stdout).expect("utf-8 output"),
    )
}

fn ledgers(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .expect("ledger directory exists")
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

/// `(id, passed, line)` for every `[PASS]`/`[FAIL]` line of a check table.
fn table(stdout: &str) -> Vec<(u8, bool, String)> {
    stdout
        .lines()
        .filter_map(|l| {
            let passed = l.starts_with("[PASS]");
            if !passed && !l.starts_with("[FAIL]") {
                return None;
            }
            let id = l[6..].split_whitespace().next()?.parse().ok()?;
            Some((id, passed, l.to_string()))
        })
        .collect()
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let (code_a, out_a) = run_check(&a);
    let (code_b, _) = run_check(&b);

    let rows = table(&out_a);
    let mut verdicts = Vec::new();
    for id in 1..=CRITERIA {
        let row = rows.iter().find(|r| r.0 == id);
        let (passed, line) = match row {
            Some((_, p, l)) => (*p, l.clone()),
            None => (false, format!("[FAIL] {id:>2} missing from check output")),
        };
        if id == CRITERIA {
            // in-process repeat plus a second process writing the same files
            let (la, lb) = (ledgers(&a), ledgers(&b));
            let same = !la.is_empty() && la == lb;
            let ok = passed && same;
            println!(
                "[{}] {id:>2} determinism across processes: {} ledgers, byte-identical: {same}; in-process {}",
                if ok { "PASS" } else { "FAIL" },
                la.len(),
                line.split_once(": ").map_or(line.as_str(), |x| x.1)
            );
            verdicts.push(ok);
        } else {
            println!("{line}");
            verdicts.push(passed);
        }
    }
    let passed = verdicts.iter().filter(|v| **v).count();
    println!("{passed} of {CRITERIA} criteria passed");
    assert_eq!((code_a, code_b), (0, 0), "check exit codes");
    assert!(verdicts.iter().all(|v| *v), "{passed} of {CRITERIA} criteria passed");
}
