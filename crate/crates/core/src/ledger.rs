//! Privacy-loss ledger.
//!
//! The ledger records the loss `ρ(k)` of every release and admits a new
//! release only if the discounted loss sum at that release stays within the
//! budget:
//!
//! ```text
//! Σ_{k=1}^{t} w(t − k) · ρ(k) ≤ ε
//! ```
//!
//! where `w` is the weight of the ledger's [`DiscountRegime`]. Because every
//! weight is 1 at delay 0 and the weights only shrink with age, checking the
//! condition at each release time is what the regime asks for: between
//! releases the sum can only decay.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laplace::sample_laplace;
use crate::regime::DiscountRegime;
use crate::schedule::NoiseSchedule;

/// Relative slack on the budget for floating-point summation.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

/// One noisy release `y(k) = f_k(X(k)) + w(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReleaseRecord {
    pub k: u64,
    pub true_value: f64,
    pub noise_scale: f64,
    pub report: f64,
    pub loss: f64,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(self, x: f64) -> Self {
        let t = self.sum + x;
        let carry = if self.sum.abs() >= x.abs() {
            self.carry + ((self.sum - t) + x)
        } else {
            self.carry + ((x - t) + self.sum)
        };
        Self { sum: t, carry }
    }

    fn scale(self, f: f64) -> Self {
        Self { sum: self.sum * f, carry: self.carry * f }
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Discounted sum of `losses` (index 0 is release 1) evaluated at time `t`.
pub(crate) fn direct_discounted_sum(regime: &DiscountRegime, losses: &[f64], t: u64) -> f64 {
    losses
        .iter()
        .enumerate()
        .fold(Compensated::default(), |acc, (i, &rho)| {
            let k = i as u64 + 1;
            acc.add(regime.weight(t - k) * rho)
        })
        .value()
}

#[derive(Debug, Clone, Serialize)]
pub struct PrivacyLedger {
    epsilon: f64,
    regime: DiscountRegime,
    losses: Vec<f64>,
    /// Discounted sum at the frontier, kept for the regimes with a one-step
    /// recurrence (undiscounted and exponential).
    #[serde(skip)]
    running: Compensated,
}

impl PrivacyLedger {
    pub fn new(epsilon: f64, regime: DiscountRegime) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { epsilon, regime, losses: Vec::new(), running: Compensated::default() })
    }

    /// Rebuilds a ledger by replaying recorded losses through the budget check.
    pub fn from_losses(epsilon: f64, regime: DiscountRegime, losses: &[f64]) -> Result<Self> {
        let mut ledger = Self::new(epsilon, regime)?;
        for (i, &rho) in losses.iter().enumerate() {
            ledger.record_loss(i as u64 + 1, rho)?;
        }
        Ok(ledger)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn regime(&self) -> DiscountRegime {
        self.regime
    }

    /// Recorded losses; element `k - 1` belongs to release `k`.
    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    /// Index of the most recent release (0 when empty).
    pub fn frontier(&self) -> u64 {
        self.losses.len() as u64
    }

    pub fn limit(&self) -> f64 {
        self.epsilon * (1.0 + BUDGET_TOLERANCE)
    }

    /// `Σ_{k ≤ t} w(t − k) ρ(k)`, with unrecorded indices contributing 0.
    pub fn discounted_sum(&self, t: u64) -> Result<f64> {
        let frontier = self.frontier();
        if t < frontier {
            return Err(Error::RetroactiveQuery { t, frontier });
        }
        Ok(direct_discounted_sum(&self.regime, &self.losses, t))
    }

    /// Budget left at the frontier.
    pub fn remaining(&self) -> f64 {
        self.epsilon - self.frontier_sum()
    }

    fn frontier_sum(&self) -> f64 {
        match self.regime {
            DiscountRegime::Hyperbolic { .. } if !self.regime.is_undiscounted() => {
                direct_discounted_sum(&self.regime, &self.losses, self.frontier())
            }
            _ => self.running.value(),
        }
    }

    /// Running state and discounted sum after appending `rho` as the next release.
    fn project(&self, rho: f64) -> (Compensated, f64) {
        if self.regime.is_undiscounted() {
            let next = self.running.add(rho);
            return (next, next.value());
        }
        match self.regime {
            DiscountRegime::Exponential { alpha } => {
                let next = self.running.scale(alpha).add(rho);
                (next, next.value())
            }
            DiscountRegime::Hyperbolic { .. } => {
                let t = self.frontier() + 1;
                let past = direct_discounted_sum(&self.regime, &self.losses, t);
                (Compensated::default(), past + rho)
            }
            DiscountRegime::None => unreachable!(),
        }
    }

    fn admit(&self, k: u64, rho: f64) -> Result<Compensated> {
        let expected = self.frontier() + 1;
        if k != expected {
            return Err(Error::NonContiguousIndex { expected, got: k });
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("privacy loss must be >= 0, got {rho}")));
        }
        let (state, would_be) = self.project(rho);
        let limit = self.limit();
        if would_be > limit {
            return Err(Error::BudgetExceeded { k, would_be, limit });
        }
        Ok(state)
    }

    /// Records an arbitrary per-release loss for release `k`, for mechanisms
    /// other than the built-in Laplace release.
    pub fn record_loss(&mut self, k: u64, rho: f64) -> Result<()> {
        let state = self.admit(k, rho)?;
        self.losses.push(rho);
        self.running = state;
        Ok(())
    }

    /// Marks period `k` as released with nothing disclosed (`ρ(k) = 0`).
    pub fn skip(&mut self, k: u64) -> Result<()> {
        self.record_loss(k, 0.0)
    }

    /// Laplace release of `true_value` at index `k`.
    ///
    /// The loss `Δf_k / b_k` is checked against the budget before any noise is
    /// drawn; on refusal the ledger and `rng` are untouched.
    pub fn release<R: Rng + ?Sized>(
        &mut self,
        k: u64,
        true_value: f64,
        delta_f_k: f64,
        schedule: &NoiseSchedule,
        rng: &mut R,
    ) -> Result<ReleaseRecord> {
        if !(delta_f_k > 0.0 && delta_f_k.is_finite()) {
            return Err(Error::InvalidParameter(format!("sensitivity must be positive, got {delta_f_k}")));
        }
        let noise_scale = schedule.scale_at(k)?;
        let loss = delta_f_k / noise_scale;
        let state = self.admit(k, loss)?;
        let report = true_value + sample_laplace(noise_scale, rng);
        self.losses.push(loss);
        self.running = state;
        Ok(ReleaseRecord { k, true_value, noise_scale, report, loss })
    }
}
