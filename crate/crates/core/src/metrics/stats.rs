use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::recorder::RunMetrics;

/// Mean with a two-sided 95% Student-t interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for fewer than two values.
    pub sd: f64,
    /// `None` for fewer than two values.
    pub half_width: Option<f64>,
}

impl Interval {
    pub fn low(&self) -> Option<f64> {
        self.half_width.map(|h| self.mean - h)
    }

    pub fn high(&self) -> Option<f64> {
        self.half_width.map(|h| self.mean + h)
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        match (self.low(), self.high(), other.low(), other.high()) {
            (Some(a), Some(b), Some(c), Some(d)) => a <= d && c <= b,
            _ => true,
        }
    }
}

/// Quantile of Student's t with `df` degrees of freedom.
pub fn t_quantile(p: f64, df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(p)
}

pub fn t_interval(values: &[f64]) -> Interval {
    let n = values.len();
    if n == 0 {
        return Interval { n, mean: f64::NAN, sd: 0.0, half_width: None };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Interval { n, mean, sd: 0.0, half_width: None };
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    let half = if sd == 0.0 { 0.0 } else { t_quantile(0.975, n - 1) * sd / (n as f64).sqrt() };
    Interval { n, mean, sd, half_width: Some(half) }
}

/// Per-metric intervals over the replications of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub replications: usize,
    pub total_cost: Interval,
    pub deadline_violations: Interval,
    pub jobs_within_deadline: Interval,
    /// Over the replications where the ratio is defined.
    pub dollars_per_useful_computation: Interval,
    pub failures_out_of_bid: Interval,
    pub vm_hours_charged: Interval,
}

pub fn aggregate(runs: &[RunMetrics]) -> ReplicationSummary {
    let of = |f: fn(&RunMetrics) -> f64| t_interval(&runs.iter().map(f).collect::<Vec<_>>());
    let ratios: Vec<f64> = runs.iter().filter_map(|r| r.dollars_per_useful_computation).collect();
    ReplicationSummary {
        replications: runs.len(),
        total_cost: of(|r| r.total_cost.dollars()),
        deadline_violations: of(|r| r.deadline_violations as f64),
        jobs_within_deadline: of(|r| r.jobs_within_deadline as f64),
        dollars_per_useful_computation: t_interval(&ratios),
        failures_out_of_bid: of(|r| r.failures_out_of_bid as f64),
        vm_hours_charged: of(|r| r.vm_hours_charged as f64),
    }
}
