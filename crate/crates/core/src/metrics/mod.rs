//! Per-run accounting and statistics over replications.

mod recorder;
mod stats;

pub use recorder::{JobOutcome, MetricsRecorder, RunMetrics};
pub use stats::{aggregate, t_interval, t_quantile, Interval, ReplicationSummary};
