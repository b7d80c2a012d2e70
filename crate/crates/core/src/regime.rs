//! Discount regimes: how much a privacy loss incurred `delay` releases ago
//! still counts against the budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiscountRegime {
    /// Plain ε-DP: every past loss counts in full.
    None,
    /// Weight `alpha^delay`, `alpha` in (0, 1].
    Exponential { alpha: f64 },
    /// Weight `1 / (1 + beta * delay)`, `beta >= 0`.
    Hyperbolic { beta: f64 },
}

impl DiscountRegime {
    pub fn exponential(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "discount factor alpha must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(Self::Exponential { alpha })
    }

    pub fn hyperbolic(beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "discounting coefficient beta must be >= 0, got {beta}"
            )));
        }
        Ok(Self::Hyperbolic { beta })
    }

    /// Weight applied to a loss recorded `delay` steps before the evaluation time.
    pub fn weight(&self, delay: u64) -> f64 {
        match *self {
            Self::None => 1.0,
            Self::Exponential { alpha } => {
                if alpha == 1.0 {
                    1.0
                } else {
                    pow_u64(alpha, delay)
                }
            }
            Self::Hyperbolic { beta } => 1.0 / (1.0 + beta * delay as f64),
        }
    }

    /// True when every weight is exactly 1 (`None`, `alpha = 1`, `beta = 0`).
    pub fn is_undiscounted(&self) -> bool {
        match *self {
            Self::None => true,
            Self::Exponential { alpha } => alpha == 1.0,
            Self::Hyperbolic { beta } => beta == 0.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Exponential { .. } => "exponential",
            Self::Hyperbolic { .. } => "hyperbolic",
        }
    }
}

fn pow_u64(base: f64, exp: u64) -> f64 {
    match i32::try_from(exp) {
        Ok(e) => base.powi(e),
        Err(_) => base.powf(exp as f64),
    }
}
