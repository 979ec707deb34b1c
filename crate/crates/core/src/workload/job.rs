use serde::{Deserialize, Serialize};

use crate::des::SimTime;

/// Average parallelism `A` and its coefficient of variance `sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moldability {
    pub parallelism: f64,
    pub variance: f64,
}

impl Moldability {
    pub const SERIAL: Moldability = Moldability {
        parallelism: 1.0,
        variance: 0.0,
    };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: u64,
    pub user_id: u32,
    pub submit_time: SimTime,
    /// Runtime on the reference machine: one core of one ECU.
    pub base_runtime_s: u64,
    pub moldability: Moldability,
    /// User-supplied estimate, on the reference machine.
    pub user_estimate_s: u64,
    pub deadline: SimTime,
}
