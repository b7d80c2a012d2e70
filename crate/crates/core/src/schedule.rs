//! Noise schedules `k -> b_k`: the Laplace scale used for the release at
//! index `k` (1-based).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regime::DiscountRegime;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSchedule {
    /// `b_k = Δf·π²·k² / (6ε)`. Keeps the undiscounted loss sum below ε forever.
    DpQuadratic { delta_f: f64, epsilon: f64 },
    /// `b_k = Δf / (ε(1 − α))`, constant in `k`.
    ExpConstant { delta_f: f64, epsilon: f64, alpha: f64 },
    /// `b_k = C·√k`, with `C` from [`hyp_sqrt_constant`].
    HypSqrt { delta_f: f64, epsilon: f64, beta: f64 },
    /// `b_k = scale·√k` with an explicit constant.
    SqrtScaled { scale: f64 },
    /// Explicit scales; `scales[k - 1]` is used for release `k`.
    Custom { scales: Vec<f64> },
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Constant `C` such that `b_k = C·√k` for the hyperbolic square-root schedule:
///
/// `C = 2Δf (atanh(1/√3) + atanh(√(β/(1+β)))) / (ε √(β(β+1)))`.
pub fn hyp_sqrt_constant(delta_f: f64, epsilon: f64, beta: f64) -> f64 {
    let bracket = (1.0 / 3.0_f64.sqrt()).atanh() + (beta / (1.0 + beta)).sqrt().atanh();
    2.0 * delta_f * bracket / (epsilon * (beta * (beta + 1.0)).sqrt())
}

impl NoiseSchedule {
    pub fn dp_quadratic(delta_f: f64, epsilon: f64) -> Result<Self> {
        require_positive("delta_f", delta_f)?;
        require_positive("epsilon", epsilon)?;
        Ok(Self::DpQuadratic { delta_f, epsilon })
    }

    /// `alpha` must be strictly below 1; at `alpha = 1` the constant scale is unbounded.
    pub fn exp_constant(delta_f: f64, epsilon: f64, alpha: f64) -> Result<Self> {
        require_positive("delta_f", delta_f)?;
        require_positive("epsilon", epsilon)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1) for the constant schedule, got {alpha}"
            )));
        }
        Ok(Self::ExpConstant { delta_f, epsilon, alpha })
    }

    /// `beta` must be strictly positive; the constant is singular at `beta = 0`.
    pub fn hyp_sqrt(delta_f: f64, epsilon: f64, beta: f64) -> Result<Self> {
        require_positive("delta_f", delta_f)?;
        require_positive("epsilon", epsilon)?;
        require_positive("beta", beta)?;
        Ok(Self::HypSqrt { delta_f, epsilon, beta })
    }

    /// Square-root schedule whose constant also covers the most recent term of
    /// the hyperbolic sum, `Δf/(b√t) ≤ Δf/b`, which the integral bound behind
    /// [`NoiseSchedule::hyp_sqrt`] leaves out. That schedule overspends for
    /// `beta` above roughly 3; this one does not.
    pub fn hyp_sqrt_conservative(delta_f: f64, epsilon: f64, beta: f64) -> Result<Self> {
        require_positive("delta_f", delta_f)?;
        require_positive("epsilon", epsilon)?;
        require_positive("beta", beta)?;
        let scale = hyp_sqrt_constant(delta_f, epsilon, beta) + delta_f / epsilon;
        Ok(Self::SqrtScaled { scale })
    }

    pub fn custom(scales: Vec<f64>) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::InvalidParameter("custom schedule has no scales".into()));
        }
        for (i, &s) in scales.iter().enumerate() {
            require_positive(&format!("scale {}", i + 1), s)?;
        }
        Ok(Self::Custom { scales })
    }

    /// Laplace scale for release `k` (1-based).
    pub fn scale_at(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidParameter("release indices start at 1".into()));
        }
        let kf = k as f64;
        Ok(match self {
            Self::DpQuadratic { delta_f, epsilon } => delta_f * PI * PI * kf * kf / (6.0 * epsilon),
            Self::ExpConstant { delta_f, epsilon, alpha } => delta_f / (epsilon * (1.0 - alpha)),
            Self::HypSqrt { delta_f, epsilon, beta } => {
                hyp_sqrt_constant(*delta_f, *epsilon, *beta) * kf.sqrt()
            }
            Self::SqrtScaled { scale } => scale * kf.sqrt(),
            Self::Custom { scales } => *scales
                .get((k - 1) as usize)
                .ok_or(Error::ScheduleExhausted { k, len: scales.len() })?,
        })
    }

    /// The discount regime the schedule was derived for, if any.
    pub fn natural_regime(&self) -> Option<DiscountRegime> {
        match *self {
            Self::DpQuadratic { .. } => Some(DiscountRegime::None),
            Self::ExpConstant { alpha, .. } => Some(DiscountRegime::Exponential { alpha }),
            Self::HypSqrt { beta, .. } => Some(DiscountRegime::Hyperbolic { beta }),
            Self::SqrtScaled { .. } | Self::Custom { .. } => None,
        }
    }

    /// Number of indices with a defined scale; `None` means unbounded.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            Self::Custom { scales } => Some(scales.len()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs()
    }

    // Reference values computed with mpmath at 30 digits.
    const PI2_OVER_6: f64 = 1.644_934_066_848_226_4;
    const HYP_C_BETA1: f64 = 2.177_680_339_733_173;
    const HYP_C_DF0_6667_BETA0_5: f64 = 2.027_690_702_935_363_6;

    #[test]
    fn dp_quadratic_examples() {
        let s = NoiseSchedule::dp_quadratic(1.0, 1.0).unwrap();
        assert!(rel_eq(s.scale_at(1).unwrap(), PI2_OVER_6, 1e-15));
        assert!(rel_eq(s.scale_at(2).unwrap(), 4.0 * PI2_OVER_6, 1e-15));
        let s = NoiseSchedule::dp_quadratic(0.6667, 0.5).unwrap();
        assert!(rel_eq(s.scale_at(1).unwrap(), 2.193_355_084_735_425, 1e-14));
    }

    #[test]
    fn dp_quadratic_basel_oracle() {
        // Σ 6/(π²k²) over k ≤ 10⁶ stays below 1.
        let s = NoiseSchedule::dp_quadratic(1.0, 1.0).unwrap();
        let sum: f64 = (1..=1_000_000u64).map(|k| 1.0 / s.scale_at(k).unwrap()).sum();
        assert!(sum <= 1.0, "{sum}");
        assert!(sum > 0.99999);
    }

    #[test]
    fn exp_constant_examples() {
        let s = NoiseSchedule::exp_constant(1.0, 1.0, 0.5).unwrap();
        for k in [1, 2, 100, 10_000] {
            assert_eq!(s.scale_at(k).unwrap(), 2.0);
        }
        let s = NoiseSchedule::exp_constant(1.0, 0.1, 0.9).unwrap();
        assert!(rel_eq(s.scale_at(7).unwrap(), 100.0, 1e-12));
        let s = NoiseSchedule::exp_constant(0.6667, 1.0, 0.99).unwrap();
        assert!(rel_eq(s.scale_at(3).unwrap(), 66.67, 1e-12));
    }

    #[test]
    fn hyp_sqrt_examples() {
        let s = NoiseSchedule::hyp_sqrt(1.0, 1.0, 1.0).unwrap();
        let b1 = s.scale_at(1).unwrap();
        assert!(rel_eq(b1, HYP_C_BETA1, 1e-14));
        assert!(rel_eq(s.scale_at(4).unwrap(), 2.0 * b1, 1e-15));
        let s = NoiseSchedule::hyp_sqrt(0.6667, 1.0, 0.5).unwrap();
        assert!(rel_eq(s.scale_at(1).unwrap(), HYP_C_DF0_6667_BETA0_5, 1e-14));
    }

    #[test]
    fn shape_invariants() {
        let dp = NoiseSchedule::dp_quadratic(0.3, 2.0).unwrap();
        let ex = NoiseSchedule::exp_constant(0.3, 2.0, 0.7).unwrap();
        let hy = NoiseSchedule::hyp_sqrt(0.3, 2.0, 0.2).unwrap();
        let c = hy.scale_at(1).unwrap();
        for k in 1..2000u64 {
            assert!(dp.scale_at(k + 1).unwrap() > dp.scale_at(k).unwrap());
            assert_eq!(ex.scale_at(k).unwrap(), ex.scale_at(1).unwrap());
            let ratio = hy.scale_at(k).unwrap() / (k as f64).sqrt();
            assert!(rel_eq(ratio, c, 1e-14));
        }
    }

    #[test]
    fn rejects_singular_and_nonpositive_parameters() {
        assert!(NoiseSchedule::dp_quadratic(0.0, 1.0).is_err());
        assert!(NoiseSchedule::dp_quadratic(1.0, -1.0).is_err());
        assert!(NoiseSchedule::exp_constant(1.0, 1.0, 1.0).is_err());
        assert!(NoiseSchedule::exp_constant(1.0, 1.0, 0.0).is_err());
        assert!(NoiseSchedule::exp_constant(1.0, 1.0, 1.5).is_err());
        assert!(NoiseSchedule::hyp_sqrt(1.0, 1.0, 0.0).is_err());
        assert!(NoiseSchedule::hyp_sqrt(1.0, 1.0, -2.0).is_err());
        assert!(NoiseSchedule::custom(vec![]).is_err());
        assert!(NoiseSchedule::custom(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn custom_schedule_is_finite() {
        let s = NoiseSchedule::custom(vec![1.0, 2.0]).unwrap();
        assert_eq!(s.scale_at(2).unwrap(), 2.0);
        assert!(matches!(s.scale_at(3), Err(Error::ScheduleExhausted { k: 3, len: 2 })));
        assert!(s.scale_at(0).is_err());
    }

    #[test]
    fn conservative_constant_adds_last_term() {
        let paper = hyp_sqrt_constant(1.0, 1.0, 10.0);
        let s = NoiseSchedule::hyp_sqrt_conservative(1.0, 1.0, 10.0).unwrap();
        assert!(rel_eq(s.scale_at(1).unwrap(), paper + 1.0, 1e-15));
    }
}
