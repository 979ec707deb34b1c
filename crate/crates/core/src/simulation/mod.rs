//! One complete simulation run: the price trace is replayed into the
//! provider while the broker schedules the workload under one bidding
//! strategy, one urgency modifier and one fault-tolerance mechanism.

mod engine;

use serde::{Deserialize, Serialize};

use crate::des::{SimTime, HOUR};
use crate::error::{Error, Result};
use crate::fault::{Recovery, TransferRates};
use crate::market::PROVISIONING_LAG;
use crate::metrics::RunMetrics;

pub use engine::simulate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub horizon_s: SimTime,
    /// Interval between scheduling passes.
    pub schedule_interval_s: SimTime,
    pub alpha: f64,
    pub provisioning_lag_s: SimTime,
    pub rates: TransferRates,
    /// Keep a per-event audit log in the result.
    pub record_events: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            horizon_s: 7 * 24 * HOUR,
            schedule_interval_s: 60,
            alpha: 2.0,
            provisioning_lag_s: PROVISIONING_LAG,
            rates: TransferRates::default(),
            record_events: false,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon_s == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if self.schedule_interval_s == 0 {
            return Err(Error::Config("scheduling interval must be positive".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        self.rates.validate()
    }
}

/// One out-of-bid termination of a running instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub at: SimTime,
    pub instance: u32,
    pub market: String,
    /// Job running at the time, if any.
    pub job: Option<u64>,
    pub replica: bool,
    /// Wall-clock seconds of computation not covered by a published snapshot.
    pub lost_work_s: f64,
    /// Suspend time of the failed instance's type.
    pub suspend_s: u64,
    pub recovery: Option<Recovery>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum EventRecord {
    Arrival { at: SimTime, job: u64, replicated: bool },
    Lease { at: SimTime, instance: u32, market: String, bid: crate::Micros },
    Started { at: SimTime, instance: u32 },
    JobStart { at: SimTime, instance: u32, job: u64, replica: bool, resume_s: u64 },
    Snapshot { at: SimTime, instance: u32, job: u64, progress_ref_s: f64 },
    Failure { at: SimTime, instance: u32 },
    Withdrawn { at: SimTime, instance: u32 },
    Completion { at: SimTime, instance: u32, job: u64, replica: bool },
    Cancelled { at: SimTime, job: u64, replica: bool },
    Terminated { at: SimTime, instance: u32, cost: crate::Micros },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub start: SimTime,
    pub end: SimTime,
    pub metrics: RunMetrics,
    pub failures: Vec<FailureRecord>,
    pub events: Vec<EventRecord>,
}
