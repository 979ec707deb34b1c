use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::des::SimTime;
use crate::error::{Error, Result};
use crate::market::{InstanceId, Provider};
use crate::money::Micros;

/// Final figures of one simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub total_cost: Micros,
    pub jobs_submitted: u64,
    pub jobs_completed: u64,
    pub deadline_violations: u64,
    pub jobs_within_deadline: u64,
    /// `None` when no job met its deadline.
    pub dollars_per_useful_computation: Option<f64>,
    pub failures_out_of_bid: u64,
    pub vm_hours_charged: u64,
    /// Unfinished at the horizon with the deadline still ahead.
    pub jobs_censored: u64,
}

impl RunMetrics {
    pub fn total_cost_dollars(&self) -> f64 {
        self.total_cost.dollars()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum JobOutcome {
    WithinDeadline,
    Violation,
    Censored,
}

/// Accumulates counters as events happen; every event counts once.
#[derive(Clone, Debug, Default)]
pub struct MetricsRecorder {
    submitted: HashSet<u64>,
    outcomes: HashMap<u64, JobOutcome>,
    completed: u64,
    billed: HashSet<InstanceId>,
    total_cost: Micros,
    vm_hours: u64,
    failures: u64,
}

impl MetricsRecorder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_submission(&mut self, job: u64) -> Result<()> {
        if !self.submitted.insert(job) {
            return Err(Error::Accounting(format!("job {job} submitted twice")));
        }
        Ok(())
    }

    pub fn record_bill(&mut self, instance: InstanceId, amount: Micros, hours: u32) -> Result<()> {
        if !self.billed.insert(instance) {
            return Err(Error::Accounting(format!("{instance} billed twice")));
        }
        self.total_cost += amount;
        self.vm_hours += u64::from(hours);
        Ok(())
    }

    /// Completion exactly at the deadline still counts as met.
    pub fn record_completion(&mut self, job: u64, at: SimTime, deadline: SimTime) -> Result<JobOutcome> {
        let outcome = if at <= deadline { JobOutcome::WithinDeadline } else { JobOutcome::Violation };
        self.settle(job, outcome)?;
        self.completed += 1;
        Ok(outcome)
    }

    pub fn record_failure(&mut self) {
        self.failures += 1;
    }

    /// A job still unfinished when the run ends at `horizon`.
    pub fn record_unfinished(&mut self, job: u64, deadline: SimTime, horizon: SimTime) -> Result<JobOutcome> {
        let outcome = if deadline < horizon { JobOutcome::Violation } else { JobOutcome::Censored };
        self.settle(job, outcome)?;
        Ok(outcome)
    }

    fn settle(&mut self, job: u64, outcome: JobOutcome) -> Result<()> {
        if !self.submitted.contains(&job) {
            return Err(Error::Accounting(format!("job {job} was never submitted")));
        }
        if self.outcomes.contains_key(&job) {
            return Err(Error::Accounting(format!("job {job} settled twice")));
        }
        self.outcomes.insert(job, outcome);
        Ok(())
    }

    pub fn outcome(&self, job: u64) -> Option<JobOutcome> {
        self.outcomes.get(&job).copied()
    }

    pub fn failures(&self) -> u64 {
        self.failures
    }

    pub fn total_cost(&self) -> Micros {
        self.total_cost
    }

    /// Checks the books against the provider and produces the run metrics.
    pub fn finalize(&self, provider: &Provider) -> Result<RunMetrics> {
        if let Some(live) = provider.live_instances().next() {
            return Err(Error::Accounting(format!("{} is still live at finalize", live.id)));
        }
        if self.billed.len() != provider.instances().len() {
            return Err(Error::Accounting(format!(
                "{} of {} instances billed",
                self.billed.len(),
                provider.instances().len()
            )));
        }
        let revenue = provider.revenue();
        if revenue != self.total_cost {
            return Err(Error::Accounting(format!(
                "recorded cost {} differs from provider revenue {}",
                self.total_cost, revenue
            )));
        }
        if self.outcomes.len() != self.submitted.len() {
            return Err(Error::Accounting(format!(
                "{} of {} jobs settled",
                self.outcomes.len(),
                self.submitted.len()
            )));
        }
        Ok(self.metrics())
    }

    /// Current figures without the end-of-run checks.
    pub fn metrics(&self) -> RunMetrics {
        let count = |o: JobOutcome| self.outcomes.values().filter(|&&v| v == o).count() as u64;
        let within = count(JobOutcome::WithinDeadline);
        RunMetrics {
            total_cost: self.total_cost,
            jobs_submitted: self.submitted.len() as u64,
            jobs_completed: self.completed,
            deadline_violations: count(JobOutcome::Violation),
            jobs_within_deadline: within,
            dollars_per_useful_computation: (within > 0).then(|| self.total_cost.dollars() / within as f64),
            failures_out_of_bid: self.failures,
            vm_hours_charged: self.vm_hours,
            jobs_censored: count(JobOutcome::Censored),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bills_accumulate() {
        let mut r = MetricsRecorder::new();
        r.record_bill(InstanceId(0), Micros(62_000), 1).unwrap();
        assert_eq!(r.total_cost(), Micros(62_000));
        assert!(r.record_bill(InstanceId(0), Micros(1), 1).is_err());
    }

    #[test]
    fn deadline_boundary() {
        let mut r = MetricsRecorder::new();
        for j in 0..3 {
            r.record_submission(j).unwrap();
        }
        assert_eq!(r.record_completion(0, 999, 1000).unwrap(), JobOutcome::WithinDeadline);
        assert_eq!(r.record_completion(1, 1000, 1000).unwrap(), JobOutcome::WithinDeadline);
        assert_eq!(r.record_completion(2, 1001, 1000).unwrap(), JobOutcome::Violation);
        let m = r.metrics();
        assert_eq!((m.jobs_within_deadline, m.deadline_violations, m.jobs_completed), (2, 1, 3));
    }

    #[test]
    fn ratio_and_null() {
        let mut r = MetricsRecorder::new();
        r.record_bill(InstanceId(0), Micros::from_dollars(357.8), 1).unwrap();
        assert_eq!(r.metrics().dollars_per_useful_computation, None);
        for j in 0..10_000 {
            r.record_submission(j).unwrap();
            r.record_completion(j, 0, 1).unwrap();
        }
        let ratio = r.metrics().dollars_per_useful_computation.unwrap();
        assert!((ratio - 0.03578).abs() < 1e-12);
    }

    #[test]
    fn unfinished_jobs() {
        let mut r = MetricsRecorder::new();
        r.record_submission(1).unwrap();
        r.record_submission(2).unwrap();
        assert_eq!(r.record_unfinished(1, 50, 100).unwrap(), JobOutcome::Violation);
        assert_eq!(r.record_unfinished(2, 150, 100).unwrap(), JobOutcome::Censored);
        assert!(r.record_completion(2, 90, 150).is_err());
        assert!(r.record_completion(3, 90, 150).is_err());
        let m = r.metrics();
        assert_eq!((m.deadline_violations, m.jobs_censored), (1, 1));
    }
}
