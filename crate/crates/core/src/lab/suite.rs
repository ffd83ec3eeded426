//! Named suites of the lab checks with plain-text reports.

use std::fmt::Write;

use super::blowup::bb_ode_comparison;
use super::fields::RandomFieldSpec;
use super::gn::gn_inequality_sweep;
use super::gronwall::{power_sweep, uniform_sweep, OdeVariant};
use super::h2bb::{h2bb_refinement_study, max_refinement_growth};
use crate::error::{Error, Result};
use crate::grid::make_grid;
use crate::rng::purpose;
use crate::thermo::MobilitySpec;

/// Suite names accepted by [`run_suite`].
pub const SUITES: [&str; 6] = ["gronwall", "uniform", "blowup", "gn", "h2bb", "all"];

/// Outcome of a suite: the report text and whether every check passed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteOutcome {
    pub report: String,
    pub passed: bool,
}

/// Run one suite (or `all`) with the given seed.
pub fn run_suite(name: &str, seed: u64) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome {
        report: String::new(),
        passed: true,
    };
    let names: Vec<&str> = match name {
        "all" => SUITES[..5].to_vec(),
        n if SUITES.contains(&n) => vec![n],
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown suite '{other}' (expected one of {})",
                SUITES.join(", ")
            )))
        }
    };
    for n in names {
        match n {
            "gronwall" => gronwall(seed, &mut out)?,
            "uniform" => uniform(seed, &mut out)?,
            "blowup" => blowup(&mut out)?,
            "gn" => gn(seed, &mut out)?,
            _ => h2bb(seed, &mut out)?,
        }
    }
    Ok(out)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn gronwall(seed: u64, out: &mut SuiteOutcome) -> Result<()> {
    let r = &mut out.report;
    writeln!(
        r,
        "# power-type Gronwall bound, 50 random specs per variant (seed {seed})"
    )
    .unwrap();
    for v in [OdeVariant::FixedSigma, OdeVariant::Saturated] {
        let (s, cases) = power_sweep(seed, 50, v)?;
        let overflow = cases.iter().filter(|c| c.bound.overflow).count();
        let ok = s.violations == 0 && s.inconsistent == 0;
        out.passed &= ok;
        writeln!(
            r,
            "{v:?}: cases {} violations {} inconsistent {} worst-consistency {:.3e} min-log-margin {:.6e} overflowed-bounds {overflow} {}",
            s.cases, s.violations, s.inconsistent, s.worst_consistency, s.min_log_margin, verdict(ok)
        )
        .unwrap();
    }
    Ok(())
}

fn uniform(seed: u64, out: &mut SuiteOutcome) -> Result<()> {
    let (s, _) = uniform_sweep(seed, 50)?;
    let ok = s.violations == 0 && s.inconsistent == 0;
    out.passed &= ok;
    writeln!(
        out.report,
        "# uniform Gronwall bound, 50 random linear ODEs (seed {seed})\ncases {} violations {} inconsistent {} worst-consistency {:.3e} min-log-margin {:.6e} {}",
        s.cases, s.violations, s.inconsistent, s.worst_consistency, s.min_log_margin, verdict(ok)
    )
    .unwrap();
    Ok(())
}

fn blowup(out: &mut SuiteOutcome) -> Result<()> {
    let rep = bb_ode_comparison(1.0, &[0.2, 0.1, 0.05], 1.0, 1.0)?;
    let r = &mut out.report;
    writeln!(r, "# B' = (K/rho) B^(2(1+rho)), K = 1, B0 = 1").unwrap();
    writeln!(
        r,
        "rho,blowup_time,exact_blowup_time,int_B,lemma_log_margin,lemma_holds,local_bound_holds"
    )
    .unwrap();
    let mut ok = rep.decreasing_in_rho;
    for row in rep.rows.iter().chain(std::iter::once(&rep.envelope)) {
        ok &= row.lemma_holds && row.local_bound_holds.unwrap_or(true) && row.consistent;
        writeln!(
            r,
            "{},{},{},{:.12e},{:.6e},{},{}",
            row.rho.map_or("envelope".to_string(), |v| v.to_string()),
            row.blowup_time.map_or("none".to_string(), |v| format!("{v:.12e}")),
            row.exact_blowup_time.map_or("-".to_string(), |v| format!("{v:.12e}")),
            row.int_b,
            row.lemma_log_margin,
            row.lemma_holds,
            row.local_bound_holds.map_or("-".to_string(), |v| v.to_string()),
        )
        .unwrap();
    }
    writeln!(
        r,
        "blow-up time strictly decreasing as rho decreases: {} {}",
        rep.decreasing_in_rho,
        verdict(ok)
    )
    .unwrap();
    out.passed &= ok;
    Ok(())
}

fn gn(seed: u64, out: &mut SuiteOutcome) -> Result<()> {
    let spec = RandomFieldSpec {
        seed,
        band_limit: 8,
        amplitude: 1.0,
        zero_mean: false,
        purpose: purpose::GN,
    };
    let rep = gn_inequality_sweep(
        &spec,
        &[2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
        make_grid(64, 64, 1.0, 1.0)?,
        100,
    )?;
    let r = &mut out.report;
    writeln!(
        r,
        "# Gagliardo-Nirenberg ratios, 100 band-limited fields on 64x64 (seed {seed})"
    )
    .unwrap();
    writeln!(r, "r,max_ratio,mean_ratio,max_dual_ratio").unwrap();
    for row in &rep.rows {
        writeln!(
            r,
            "{},{:.12e},{:.12e},{:.12e}",
            row.r, row.max_ratio, row.mean_ratio, row.max_dual_ratio
        )
        .unwrap();
    }
    writeln!(
        r,
        "slope of ln(max ratio) vs ln r: {:.6} {}",
        rep.slope,
        verdict(rep.no_growth)
    )
    .unwrap();
    out.passed &= rep.no_growth;
    Ok(())
}

fn h2bb(seed: u64, out: &mut SuiteOutcome) -> Result<()> {
    let spec = MobilitySpec::polynomial(vec![1.0, 0.5], 0.5, 1.5)?;
    let study = h2bb_refinement_study(seed, 50, 4, &[16, 32], &[2.5, 3.0, 4.0, 6.0], &spec, true)?;
    let r = &mut out.report;
    writeln!(
        r,
        "# sampled H2 regularity constants, 50 (q, f) pairs, b(s) = 1 + s/2 (seed {seed})"
    )
    .unwrap();
    writeln!(r, "n,s,C_star").unwrap();
    let mut ok = true;
    for (n, rep) in &study {
        ok &= rep.all_finite;
        for (s, c) in &rep.c_star {
            writeln!(r, "{n},{s},{c:.12e}").unwrap();
        }
        writeln!(
            r,
            "{n}: s-free constant {:.6e}, W24 constant {:.6e}, H3 constant {:.6e}",
            rep.h2_constant,
            rep.w24_constant.unwrap_or(f64::NAN),
            rep.h3_constant.unwrap_or(f64::NAN)
        )
        .unwrap();
    }
    writeln!(
        r,
        "largest C* growth under refinement: {:.6} {}",
        max_refinement_growth(&study),
        verdict(ok)
    )
    .unwrap();
    out.passed &= ok;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_suite("nope", 1).is_err());
    }

    #[test]
    fn blowup_suite_passes() {
        let o = run_suite("blowup", 1).unwrap();
        assert!(o.passed, "{}", o.report);
    }
}
