//! The evolving dataset: one row per individual, one column per time step,
//! growing by appending columns.

use std::sync::Arc;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single entry; `None` marks an individual absent at that time.
pub type Entry = Option<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidParameter(format!("bounds need lo < hi, got ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Self { lo: 0.0, hi: 200.0 }
    }
}

/// Append-only `n × t` matrix. Columns are shared, so clones are cheap
/// snapshots that later appends do not affect.
#[derive(Debug, Clone)]
pub struct EvolvingDataset {
    n: usize,
    bounds: Bounds,
    start_date: Option<NaiveDate>,
    columns: Vec<Arc<[Entry]>>,
}

impl EvolvingDataset {
    pub fn new(n: usize, bounds: Bounds) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dataset needs at least one individual".into()));
        }
        Ok(Self { n, bounds, start_date: None, columns: Vec::new() })
    }

    /// Labels column 1 with `date` and each later column with the following day.
    pub fn with_start_date(mut self, date: NaiveDate) -> Self {
        self.start_date = Some(date);
        self
    }

    pub fn append_column(&mut self, column: Vec<Entry>) -> Result<()> {
        if column.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: column.len() });
        }
        for (index, e) in column.iter().enumerate() {
            if let Some(value) = *e {
                if !self.bounds.contains(value) {
                    return Err(Error::BoundsViolation {
                        index,
                        value,
                        lo: self.bounds.lo,
                        hi: self.bounds.hi,
                    });
                }
            }
        }
        self.columns.push(column.into());
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of columns so far.
    pub fn t(&self) -> usize {
        self.columns.len()
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn start_date(&self) -> Option<NaiveDate> {
        self.start_date
    }

    /// Column `t` (1-based).
    pub fn column(&self, t: usize) -> Result<&[Entry]> {
        if t == 0 || t > self.columns.len() {
            return Err(Error::IndexOutOfRange { t, len: self.columns.len() });
        }
        Ok(&self.columns[t - 1])
    }

    pub fn date_of(&self, t: usize) -> Option<NaiveDate> {
        let offset = u64::try_from(t.checked_sub(1)?).ok()?;
        self.start_date?.checked_add_days(Days::new(offset))
    }

    pub fn has_missing(&self) -> bool {
        self.columns.iter().any(|c| c.iter().any(Option::is_none))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Average over the present entries only.
    #[default]
    ExcludeFromMean,
    /// Missing entries count as 0 and the divisor stays `n`.
    TreatAsZero,
}

/// `f_t(X(t)) = (1/n) Σ x_i(t)` over a bounded value domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanQuery {
    pub bounds: Bounds,
    pub missing_policy: MissingPolicy,
}

impl MeanQuery {
    pub fn new(bounds: Bounds, missing_policy: MissingPolicy) -> Self {
        Self { bounds, missing_policy }
    }

    pub fn mean_at(&self, ds: &EvolvingDataset, t: usize) -> Result<f64> {
        let col = ds.column(t)?;
        let (sum, present) = col
            .iter()
            .flatten()
            .fold((0.0, 0usize), |(s, c), &v| (s + v, c + 1));
        match self.missing_policy {
            MissingPolicy::ExcludeFromMean if present == 0 => Err(Error::AllMissing { t }),
            MissingPolicy::ExcludeFromMean => Ok(sum / present as f64),
            MissingPolicy::TreatAsZero => Ok(sum / ds.n() as f64),
        }
    }

    /// Largest change of the mean when one individual's entry changes.
    ///
    /// With every entry present this is `(hi − lo)/n`. Under
    /// [`MissingPolicy::TreatAsZero`] a neighbour may also swap a value for a
    /// missing entry (i.e. for 0), so the range widens to include 0 when the
    /// bounds do not.
    pub fn sensitivity(&self, n: usize) -> f64 {
        let Bounds { lo, hi } = self.bounds;
        let range = match self.missing_policy {
            MissingPolicy::TreatAsZero if !(lo <= 0.0 && 0.0 <= hi) => {
                hi.abs().max(lo.abs()).max(hi - lo)
            }
            _ => hi - lo,
        };
        range / n as f64
    }
}

/// `(hi − lo)/n` for a complete-data mean.
pub fn sensitivity_mean(q: &MeanQuery, n: usize) -> f64 {
    q.sensitivity(n)
}
