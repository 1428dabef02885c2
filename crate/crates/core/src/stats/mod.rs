//! Estimators and hypothesis tests shared by the experiments.

mod fit;
mod mtp;
pub(crate) mod stream;
mod tests;

pub use fit::{growth_rate_fit, GrowthFit};
pub use mtp::{mtp_check, mtp_statistic, root_degree_test};
pub use stream::{derive_stream, purpose, RandomStreamSpec, Stream};
pub use tests::{chi_square, mean_interval, normal_quantile, wilson_interval, Interval, TestReport};

/// Default confidence level for intervals and test decisions.
pub const DEFAULT_LEVEL: f64 = 0.99;
