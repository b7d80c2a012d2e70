//! Error-versus-time and error-versus-discount experiments for the mean query.
//!
//! The quality metric is the expected relative error
//! `E|y(t) − f_t| / |f_t|`, which for Laplace noise of scale `b_t` is exactly
//! `b_t / |f_t|`. The Monte Carlo estimate is kept as a cross-check.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{EvolvingDataset, MeanQuery, MissingPolicy};
use crate::error::{Error, Result};
use crate::laplace::sample_laplace;
use crate::ledger::PrivacyLedger;
use crate::regime::DiscountRegime;
use crate::rng;
use crate::schedule::NoiseSchedule;

/// Means with smaller magnitude are treated as zero; relative error is undefined there.
pub const ZERO_MEAN_THRESHOLD: f64 = 1e-12;

const RELEASE_STREAM_TAG: u32 = 0x5245;
const MONTE_CARLO_STREAM_TAG: u32 = 0x4d43;

/// A privacy notion paired with the schedule derived for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Setup {
    /// Undiscounted ε-DP with the quadratic schedule.
    Dp,
    /// Exponential discounting with the constant schedule.
    Exponential { alpha: f64 },
    /// Hyperbolic discounting with the square-root schedule.
    Hyperbolic { beta: f64 },
}

impl Setup {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Dp => "dp",
            Self::Exponential { .. } => "exp",
            Self::Hyperbolic { .. } => "hyp",
        }
    }

    pub fn regime(&self) -> Result<DiscountRegime> {
        match *self {
            Self::Dp => Ok(DiscountRegime::None),
            Self::Exponential { alpha } => DiscountRegime::exponential(alpha),
            Self::Hyperbolic { beta } => DiscountRegime::hyperbolic(beta),
        }
    }

    pub fn schedule(&self, delta_f: f64, epsilon: f64) -> Result<NoiseSchedule> {
        match *self {
            Self::Dp => NoiseSchedule::dp_quadratic(delta_f, epsilon),
            Self::Exponential { alpha } => NoiseSchedule::exp_constant(delta_f, epsilon, alpha),
            Self::Hyperbolic { beta } => NoiseSchedule::hyp_sqrt(delta_f, epsilon, beta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    /// Monte Carlo draws per time step; 0 disables the empirical column.
    pub monte_carlo_samples: usize,
    /// Permit the exclude-from-mean policy on data with missing entries.
    pub allow_unsound_missing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { epsilon: 1.0, alpha: 0.9, beta: 1.0, seed: 42, monte_carlo_samples: 0, allow_unsound_missing: false }
    }
}

impl ExperimentConfig {
    pub fn setups(&self) -> [Setup; 3] {
        [Setup::Dp, Setup::Exponential { alpha: self.alpha }, Setup::Hyperbolic { beta: self.beta }]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        for s in self.setups() {
            s.regime()?;
            s.schedule(1.0, self.epsilon)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub t: u64,
    pub date: Option<NaiveDate>,
    /// `None` when every entry of the column is missing.
    pub true_mean: Option<f64>,
    pub noise_scale: f64,
    /// `None` when the period was skipped.
    pub report: Option<f64>,
    pub analytic_rel_err: Option<f64>,
    pub empirical_rel_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSeries {
    pub setup: Setup,
    pub delta_f: f64,
    pub rows: Vec<ErrorRow>,
    /// Time steps left out of the average (zero mean or no data).
    pub excluded: Vec<u64>,
}

impl ErrorSeries {
    /// `(1/T) Σ_t err(t)` over the included time steps.
    pub fn average_analytic_error(&self) -> Option<f64> {
        mean_of(self.rows.iter().filter_map(|r| r.analytic_rel_err))
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn is_zero_mean(mean: f64) -> bool {
    mean.abs() < ZERO_MEAN_THRESHOLD
}

pub fn analytic_expected_relative_error(noise_scale: f64, true_mean: f64) -> Result<f64> {
    if is_zero_mean(true_mean) {
        return Err(Error::ZeroMean);
    }
    Ok(noise_scale / true_mean.abs())
}

/// Monte Carlo mean of `|w| / |true_mean|` over `samples` Laplace draws.
pub fn empirical_relative_error<R: rand::Rng + ?Sized>(
    noise_scale: f64,
    true_mean: f64,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if is_zero_mean(true_mean) {
        return Err(Error::ZeroMean);
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let total: f64 = (0..samples).map(|_| sample_laplace(noise_scale, rng).abs()).sum();
    Ok(total / samples as f64 / true_mean.abs())
}

/// Empirical relative error of the mean query at time `t`, deterministic in `seed`.
pub fn empirical_expected_relative_error(
    ds: &EvolvingDataset,
    q: &MeanQuery,
    t: usize,
    schedule: &NoiseSchedule,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mean = q.mean_at(ds, t)?;
    let scale = schedule.scale_at(t as u64)?;
    let mut r = rng::stream(seed, rng::stream_id(MONTE_CARLO_STREAM_TAG, t as u32));
    empirical_relative_error(scale, mean, samples, &mut r)
}

fn check_sensitivity_soundness(ds: &EvolvingDataset, q: &MeanQuery, allow: bool) -> Result<()> {
    if q.missing_policy == MissingPolicy::ExcludeFromMean && ds.has_missing() && !allow {
        return Err(Error::UnsoundSensitivity);
    }
    Ok(())
}

/// Mean of column `t`, or `None` when the column has no data.
fn column_mean(ds: &EvolvingDataset, q: &MeanQuery, t: usize) -> Result<Option<f64>> {
    match q.mean_at(ds, t) {
        Ok(m) => Ok(Some(m)),
        Err(Error::AllMissing { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn run_setup(
    ds: &EvolvingDataset,
    q: &MeanQuery,
    cfg: &ExperimentConfig,
    index: u32,
    setup: Setup,
) -> Result<ErrorSeries> {
    let delta_f = q.sensitivity(ds.n());
    let schedule = setup.schedule(delta_f, cfg.epsilon)?;
    let mut ledger = PrivacyLedger::new(cfg.epsilon, setup.regime()?)?;
    let mut release_rng = rng::stream(cfg.seed, rng::stream_id(RELEASE_STREAM_TAG, index));
    let mut rows = Vec::with_capacity(ds.t());
    let mut excluded = Vec::new();

    for t in 1..=ds.t() {
        let k = t as u64;
        let noise_scale = schedule.scale_at(k)?;
        let mean = column_mean(ds, q, t)?;
        let report = match mean {
            Some(m) => Some(ledger.release(k, m, delta_f, &schedule, &mut release_rng)?.report),
            None => {
                ledger.skip(k)?;
                None
            }
        };
        let usable = mean.filter(|m| !is_zero_mean(*m));
        if usable.is_none() {
            excluded.push(k);
        }
        let analytic_rel_err = usable.map(|m| noise_scale / m.abs());
        let empirical_rel_err = match usable {
            Some(m) if cfg.monte_carlo_samples > 0 => {
                let stream = rng::stream_id(MONTE_CARLO_STREAM_TAG + index, t as u32);
                let mut r = rng::stream(cfg.seed, stream);
                Some(empirical_relative_error(noise_scale, m, cfg.monte_carlo_samples, &mut r)?)
            }
            _ => None,
        };
        rows.push(ErrorRow {
            t: k,
            date: ds.date_of(t),
            true_mean: mean,
            noise_scale,
            report,
            analytic_rel_err,
            empirical_rel_err,
        });
    }
    Ok(ErrorSeries { setup, delta_f, rows, excluded })
}

/// Releases the mean at every time step under each of the three setups,
/// each through its own ledger and random stream.
pub fn run_experiment(ds: &EvolvingDataset, q: &MeanQuery, cfg: &ExperimentConfig) -> Result<Vec<ErrorSeries>> {
    cfg.validate()?;
    if ds.t() == 0 {
        return Err(Error::InvalidParameter("dataset has no columns".into()));
    }
    check_sensitivity_soundness(ds, q, cfg.allow_unsound_missing)?;
    cfg.setups()
        .into_par_iter()
        .enumerate()
        .map(|(i, setup)| run_setup(ds, q, cfg, i as u32, setup))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscountFamily {
    Exponential,
    Hyperbolic,
}

impl DiscountFamily {
    pub fn setup(&self, param: f64) -> Setup {
        match self {
            Self::Exponential => Setup::Exponential { alpha: param },
            Self::Hyperbolic => Setup::Hyperbolic { beta: param },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub epsilon: f64,
    pub family: DiscountFamily,
    pub grid: Vec<f64>,
    /// Skip zero-mean days (and count them) instead of failing.
    pub skip_zero_means: bool,
    pub allow_unsound_missing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub avg_rel_err: f64,
    pub excluded_days: usize,
}

/// Average analytic relative error for each discount parameter in the grid.
pub fn sweep_discount(ds: &EvolvingDataset, q: &MeanQuery, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.grid.is_empty() {
        return Err(Error::InvalidParameter("parameter grid is empty".into()));
    }
    if ds.t() == 0 {
        return Err(Error::InvalidParameter("dataset has no columns".into()));
    }
    check_sensitivity_soundness(ds, q, cfg.allow_unsound_missing)?;
    let delta_f = q.sensitivity(ds.n());
    let schedules = cfg
        .grid
        .iter()
        .map(|&p| {
            let setup = cfg.family.setup(p);
            setup.regime()?;
            setup.schedule(delta_f, cfg.epsilon)
        })
        .collect::<Result<Vec<_>>>()?;

    let means = (1..=ds.t()).map(|t| column_mean(ds, q, t)).collect::<Result<Vec<_>>>()?;
    if !cfg.skip_zero_means && means.iter().flatten().any(|m| is_zero_mean(*m)) {
        return Err(Error::ZeroMean);
    }

    cfg.grid
        .par_iter()
        .zip(schedules)
        .map(|(&param, schedule)| {
            let mut errs = Vec::with_capacity(means.len());
            let mut excluded_days = 0;
            for (i, mean) in means.iter().enumerate() {
                match mean.filter(|m| !is_zero_mean(*m)) {
                    Some(m) => errs.push(schedule.scale_at(i as u64 + 1)? / m.abs()),
                    None => excluded_days += 1,
                }
            }
            let avg_rel_err = mean_of(errs.into_iter())
                .ok_or_else(|| Error::InvalidParameter("no day has a nonzero mean".into()))?;
            Ok(SweepRow { param, avg_rel_err, excluded_days })
        })
        .collect()
}
