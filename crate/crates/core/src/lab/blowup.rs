//! Blow-up of the power-law ODE `B' = (K/ρ) B^{2(1+ρ)}` versus `ρ`.
//!
//! The ODE is autonomous with `B' > 0`, so it is integrated with RK4 in the
//! hodograph variable `u = ln B`: `dt/du = 1/u'(u)` and `d(∫B)/du = e^u/u'(u)`.
//! The blow-up event `B = B_EVENT` is then an exact endpoint of the grid.

use rayon::prelude::*;

use super::gronwall::{liu_zhang_from_parts, ln_saturation, ORACLE_SLACK, RK4_CONSISTENCY};
use crate::error::{Error, Result};

/// Level at which the solution counts as blown up.
pub const B_EVENT: f64 = 1e12;

/// Refinement target of the hodograph integration; the integrands are smooth
/// in `u`, so this is far below the generic oracle target at little cost.
const HODOGRAPH_CONSISTENCY: f64 = 1e-12;

/// One integrated blow-up trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupRow {
    /// `None` for the envelope ODE that saturates the hypothesis over all ρ.
    pub rho: Option<f64>,
    /// Time at which `B` reaches [`B_EVENT`], if before the horizon.
    pub blowup_time: Option<f64>,
    /// Time at which `B = B_EVENT` is reached, horizon or not.
    pub event_time: f64,
    /// Closed-form blow-up time `ρ B0^{-(1+2ρ)} / ((1+2ρ)K)` (power ODE only).
    pub exact_blowup_time: Option<f64>,
    /// `∫_0 B` up to the event or the horizon.
    pub int_b: f64,
    /// `min_t [ln bound(t) - ln B(t)]` for the Gronwall bound with
    /// `M = 2K`, `δ = 1/2`, `g = B` applied on `[0, t]`.
    pub lemma_log_margin: f64,
    pub lemma_holds: bool,
    /// Whether `B ≤ B0 [1 - 2K B0^{2ρ} ∫B]^{-1/(2ρ)}` at every point inside
    /// its window `2K B0^{2ρ} ∫B < 1` (power ODE only).
    pub local_bound_holds: Option<bool>,
    pub local_bound_rel_excess: Option<f64>,
    pub consistency: f64,
    pub consistent: bool,
}

/// Blow-up comparison over a list of `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupReport {
    pub k: f64,
    pub b0: f64,
    pub horizon: f64,
    pub rows: Vec<BlowupRow>,
    /// The envelope `B' = inf_{ρ∈(0,1/4)} (K/ρ) B^{2(1+ρ)}`, which meets the
    /// Gronwall hypothesis for every exponent at once.
    pub envelope: BlowupRow,
    /// Blow-up times strictly decrease as `ρ` decreases.
    pub decreasing_in_rho: bool,
}

/// `(t, ∫B)` at `u = ln B` on a uniform `u` grid.
fn hodograph(rate: &impl Fn(f64) -> f64, u0: f64, u1: f64, steps: usize) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let h = (u1 - u0) / steps as f64;
    let f = |u: f64| {
        let r = rate(u);
        (1.0 / r, u.exp() / r)
    };
    let (mut t, mut ib) = (0.0, 0.0);
    let mut us = vec![u0];
    let mut ts = vec![0.0];
    let mut is = vec![0.0];
    for s in 0..steps {
        let u = u0 + s as f64 * h;
        let k1 = f(u);
        let k2 = f(u + 0.5 * h);
        let k4 = f(u + h);
        // autonomous in (t, ∫B): k2 = k3
        t += h / 6.0 * (k1.0 + 4.0 * k2.0 + k4.0);
        ib += h / 6.0 * (k1.1 + 4.0 * k2.1 + k4.1);
        if !(t.is_finite() && ib.is_finite()) {
            return None;
        }
        us.push(if s + 1 == steps { u1 } else { u + h });
        ts.push(t);
        is.push(ib);
    }
    Some((us, ts, is))
}

fn integrate_row(k: f64, b0: f64, horizon: f64, rho: Option<f64>) -> Result<BlowupRow> {
    let rate = move |u: f64| match rho {
        // u' = (K/ρ) B^{1+2ρ}
        Some(r) => k / r * ((1.0 + 2.0 * r) * u).exp(),
        // u' = 2K B inf_{σ∈(0,1/2)} B^σ/σ
        None => 2.0 * k * (u + ln_saturation(u, 0.5)).exp(),
    };
    let (u0, u1) = (b0.ln(), B_EVENT.ln());
    let mut n = 64;
    let mut coarse = hodograph(&rate, u0, u1, n).ok_or_else(|| Error::NonFinite("blow-up oracle".into()))?;
    let (us, ts, is, consistency) = loop {
        let fine = hodograph(&rate, u0, u1, 2 * n).ok_or_else(|| Error::NonFinite("blow-up oracle".into()))?;
        let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { ((a - b) / b).abs() };
        let diff = (0..coarse.0.len())
            .map(|i| rel(coarse.1[i], fine.1[2 * i]).max(rel(coarse.2[i], fine.2[2 * i])))
            .fold(0.0, f64::max);
        n *= 2;
        if diff <= HODOGRAPH_CONSISTENCY || n >= 1 << 20 {
            break (fine.0, fine.1, fine.2, diff);
        }
        coarse = fine;
    };
    let event_time = *ts.last().unwrap();
    let blowup_time = (event_time <= horizon).then_some(event_time);
    let last = ts.iter().rposition(|&t| t <= horizon).unwrap_or(0);
    let mut lemma_log_margin = f64::INFINITY;
    let mut local_excess: Option<f64> = rho.map(|_| f64::NEG_INFINITY);
    for i in 0..=last {
        let bound = liu_zhang_from_parts(b0, 2.0 * k, 0.5, is[i]);
        lemma_log_margin = lemma_log_margin.min(bound.ln_value - us[i]);
        if let (Some(r), Some(ex)) = (rho, local_excess.as_mut()) {
            let w = 1.0 - 2.0 * k * b0.powf(2.0 * r) * is[i];
            if w > 0.0 {
                let ln_local = b0.ln() - w.ln() / (2.0 * r);
                *ex = ex.max((us[i] - ln_local).exp_m1());
            }
        }
    }
    Ok(BlowupRow {
        rho,
        blowup_time,
        event_time,
        exact_blowup_time: rho.map(|r| r * b0.powf(-(1.0 + 2.0 * r)) / ((1.0 + 2.0 * r) * k)),
        int_b: is[last],
        lemma_log_margin,
        lemma_holds: lemma_log_margin >= -ORACLE_SLACK.ln_1p(),
        local_bound_holds: local_excess.map(|e| e <= ORACLE_SLACK),
        local_bound_rel_excess: local_excess,
        consistency,
        consistent: consistency <= RK4_CONSISTENCY,
    })
}

/// Integrate `B' = (K/ρ) B^{2(1+ρ)}`, `B(0) = B0`, for each `ρ` up to the
/// horizon `t_end` or the blow-up event, and compare with the global
/// Gronwall bound and the local closed-form bound.
pub fn bb_ode_comparison(k: f64, rho_list: &[f64], b0: f64, t_end: f64) -> Result<BlowupReport> {
    if !(k > 0.0 && (1.0..B_EVENT).contains(&b0) && t_end > 0.0) {
        return Err(Error::InvalidParameter(
            "blow-up comparison needs K > 0, 1 ≤ B0 < 1e12, T > 0".into(),
        ));
    }
    if rho_list.iter().any(|&r| !(r > 0.0 && r < 0.25)) {
        return Err(Error::InvalidParameter("every ρ must lie in (0, 1/4)".into()));
    }
    let rows: Vec<BlowupRow> = rho_list
        .par_iter()
        .map(|&r| integrate_row(k, b0, t_end, Some(r)))
        .collect::<Result<_>>()?;
    let envelope = integrate_row(k, b0, t_end, None)?;
    let mut sorted: Vec<&BlowupRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.rho.partial_cmp(&a.rho).unwrap());
    let decreasing_in_rho = sorted.windows(2).all(|w| match (w[0].blowup_time, w[1].blowup_time) {
        (Some(a), Some(b)) => b < a,
        _ => false,
    });
    Ok(BlowupReport {
        k,
        b0,
        horizon: t_end,
        rows,
        envelope,
        decreasing_in_rho,
    })
}
