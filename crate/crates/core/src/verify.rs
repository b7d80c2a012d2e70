//! Numeric check of a schedule against a discount regime: the largest
//! discounted loss sum over a finite horizon.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ledger::BUDGET_TOLERANCE;
use crate::regime::DiscountRegime;
use crate::schedule::NoiseSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyReport {
    pub horizon: u64,
    pub epsilon: f64,
    /// `max_t Σ_{k ≤ t} w(t − k)·Δf/b_k` over `t = 1..=horizon`.
    pub max_sum: f64,
    /// The first `t` attaining `max_sum`.
    pub argmax_t: u64,
    /// `epsilon − max_sum`.
    pub margin: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.max_sum <= self.epsilon * (1.0 + BUDGET_TOLERANCE)
    }
}

/// Per-release losses `Δf / b_k` for `k = 1..=horizon`.
pub fn losses(schedule: &NoiseSchedule, delta_f: f64, horizon: u64) -> Result<Vec<f64>> {
    (1..=horizon).map(|k| schedule.scale_at(k).map(|b| delta_f / b)).collect()
}

/// Sum at time `t` by direct summation, for spot checks beyond a scanned horizon.
pub fn discounted_sum_at(regime: &DiscountRegime, losses: &[f64], t: u64) -> f64 {
    let upto = (t as usize).min(losses.len());
    crate::ledger::direct_discounted_sum(regime, &losses[..upto], t)
}

/// Scans every `t` up to `horizon`.
///
/// Undiscounted and exponential regimes use the running recurrence
/// `s_t = α·s_{t−1} + ρ(t)` (α = 1 when undiscounted); hyperbolic weights
/// have no one-step recurrence, so each `t` is summed directly (quadratic
/// cost, parallel over `t`).
pub fn verify_schedule(
    schedule: &NoiseSchedule,
    regime: &DiscountRegime,
    delta_f: f64,
    epsilon: f64,
    horizon: u64,
) -> Result<VerifyReport> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    if !(delta_f > 0.0 && epsilon > 0.0) {
        return Err(Error::InvalidParameter("delta_f and epsilon must be positive".into()));
    }
    let rho = losses(schedule, delta_f, horizon)?;

    let sums: Vec<f64> = match *regime {
        r if r.is_undiscounted() => running_sums(&rho, 1.0),
        DiscountRegime::Exponential { alpha } => running_sums(&rho, alpha),
        DiscountRegime::Hyperbolic { .. } => (1..=horizon)
            .into_par_iter()
            .map(|t| discounted_sum_at(regime, &rho, t))
            .collect(),
        DiscountRegime::None => unreachable!(),
    };

    let (idx, max_sum) = sums
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, s)| if s > best.1 { (i, s) } else { best });
    Ok(VerifyReport {
        horizon,
        epsilon,
        max_sum,
        argmax_t: idx as u64 + 1,
        margin: epsilon - max_sum,
    })
}

/// `s_t = factor·s_{t−1} + ρ(t)` with Neumaier compensation.
fn running_sums(rho: &[f64], factor: f64) -> Vec<f64> {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    rho.iter()
        .map(|&x| {
            sum *= factor;
            carry *= factor;
            let t = sum + x;
            if sum.abs() >= x.abs() {
                carry += (sum - t) + x;
            } else {
                carry += (x - t) + sum;
            }
            sum = t;
            sum + carry
        })
        .collect()
}
