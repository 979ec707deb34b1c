use serde::{Deserialize, Serialize};

use crate::des::SimTime;
use crate::error::{Error, Result};
use crate::market::DcId;

/// State transfer rates in MB/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransferRates {
    /// Serialization rate while suspending.
    pub s: f64,
    /// Restore rate within one datacenter.
    pub r_same_dc: f64,
    /// Restore rate across datacenters.
    pub r_cross_dc: f64,
}

impl Default for TransferRates {
    fn default() -> Self {
        TransferRates {
            s: 63.67,
            r_same_dc: 81.27,
            r_cross_dc: 40.64,
        }
    }
}

impl TransferRates {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("s", self.s), ("r_same_dc", self.r_same_dc), ("r_cross_dc", self.r_cross_dc)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("transfer rate {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Seconds the VM is paused to save `memory_mb` of state.
    pub fn suspend_time(&self, memory_mb: u32) -> u64 {
        seconds(memory_mb, self.s)
    }

    /// Seconds to restore `memory_mb` of state on a fresh VM.
    pub fn resume_time(&self, memory_mb: u32, same_dc: bool) -> u64 {
        let rate = if same_dc { self.r_same_dc } else { self.r_cross_dc };
        seconds(memory_mb, rate)
    }
}

fn seconds(memory_mb: u32, rate: f64) -> u64 {
    if memory_mb == 0 {
        return 0;
    }
    (memory_mb as f64 / rate - 1e-9).ceil() as u64
}

/// Latest published VM state of one job.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub instance: u32,
    /// Reference-machine seconds of work captured.
    pub progress_ref_s: f64,
    pub size_mb: u32,
    pub stored_in: DcId,
    pub taken_at: SimTime,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suspend_times() {
        let r = TransferRates::default();
        assert_eq!(r.suspend_time(1740), 28);
        assert_eq!(r.suspend_time(15360), 242);
        assert_eq!(r.suspend_time(0), 0);
    }

    #[test]
    fn resume_times() {
        let r = TransferRates::default();
        assert_eq!(r.resume_time(1740, true), 22);
        assert_eq!(r.resume_time(1740, false), 43);
        for m in [1, 100, 1740, 7680, 15360] {
            assert!(r.resume_time(m, false) >= r.resume_time(m, true));
        }
    }

    #[test]
    fn exact_multiples_do_not_round_up() {
        let r = TransferRates { s: 10.0, r_same_dc: 20.0, r_cross_dc: 10.0 };
        assert_eq!(r.suspend_time(100), 10);
        assert_eq!(r.resume_time(100, true), 5);
    }

    #[test]
    fn rejects_non_positive_rates() {
        let r = TransferRates { s: 0.0, ..TransferRates::default() };
        assert!(r.validate().is_err());
        assert!(TransferRates::default().validate().is_ok());
    }
}
