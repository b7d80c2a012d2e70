//! Streaming differential privacy for evolving datasets, with undiscounted,
//! exponentially discounted and hyperbolically discounted privacy budgets.

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod format;
pub mod ingest;
pub mod laplace;
pub mod ledger;
pub mod regime;
pub mod rng;
pub mod schedule;
pub mod verify;

pub use dataset::{sensitivity_mean, Bounds, Entry, EvolvingDataset, MeanQuery, MissingPolicy};
pub use error::{Error, Result};
pub use experiment::{
    analytic_expected_relative_error, empirical_expected_relative_error, run_experiment, sweep_discount,
    DiscountFamily, ErrorRow, ErrorSeries, ExperimentConfig, Setup, SweepConfig, SweepRow,
};
pub use laplace::sample_laplace;
pub use ledger::{PrivacyLedger, ReleaseRecord, BUDGET_TOLERANCE};
pub use regime::DiscountRegime;
pub use schedule::NoiseSchedule;
pub use verify::{verify_schedule, VerifyReport};
