use serde::{Deserialize, Serialize};

use crate::des::SimTime;
use crate::market::PROVISIONING_LAG;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UrgencyParams {
    /// Urgency modifier; larger values provision earlier.
    pub alpha: f64,
    pub provisioning_lag_s: SimTime,
}

impl UrgencyParams {
    pub fn new(alpha: f64) -> Self {
        UrgencyParams {
            alpha,
            provisioning_lag_s: PROVISIONING_LAG,
        }
    }
}

/// Longest the job can wait before a resource must be provisioned:
/// `max(0, deadline - t - (alpha * e + B))`.
pub fn urgency(deadline: SimTime, t: SimTime, estimate_s: u64, params: &UrgencyParams) -> SimTime {
    let reserve = (params.alpha * estimate_s as f64).ceil() as u64 + params.provisioning_lag_s;
    deadline.saturating_sub(t).saturating_sub(reserve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_substitution() {
        assert_eq!(urgency(3600, 0, 1000, &UrgencyParams::new(2.0)), 1300);
    }

    #[test]
    fn clamped_at_zero() {
        assert_eq!(urgency(2000, 0, 1000, &UrgencyParams::new(2.0)), 0);
        assert_eq!(urgency(10, 50, 1000, &UrgencyParams::new(2.0)), 0);
    }

    #[test]
    fn conservative_threshold() {
        let p = UrgencyParams::new(20.0);
        assert_eq!(urgency(20_300, 0, 1000, &p), 0);
        assert_eq!(urgency(20_301, 0, 1000, &p), 1);
    }
}
