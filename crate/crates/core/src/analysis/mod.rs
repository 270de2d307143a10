//! Report computations over a zone snapshot and an as-of view of the store.

mod buckets;
mod coverage;
mod lag;
mod logs;
pub mod output;
mod web;

use chrono::NaiveDate;

pub use buckets::{bucket_report, bucket_report_from, quantile, Bucket, BucketReport};
pub use coverage::{coverage_report, percent_half_up, weighted_average, CoverageReport};
pub use lag::{lag_cdf, LagCdf};
pub use logs::{expired_contribution, single_log_ranking, LogCoverage};
pub use web::{web_presence_report, Category, CategoryRow, PortClass, WebPresenceReport};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("zone is for .{0} but the view is for .{1}")]
    TldMismatch(String, String),
    #[error("no input")]
    EmptyInput,
    #[error("reports have different cut-offs ({0} and {1})")]
    CutoffMismatch(NaiveDate, NaiveDate),
    #[error("ratio undefined: denominator is zero")]
    DivisionUndefined,
    #[error("identity violated: {0}")]
    IdentityViolation(String),
}
