use std::collections::{HashMap, VecDeque};

use crate::market::InstanceType;
use crate::workload::{scale_reference, Job};

const HISTORY: usize = 2;

/// Runtime estimator: mean reference runtime of the user's two most
/// recently completed jobs, falling back to the user's own estimate.
#[derive(Clone, Debug, Default)]
pub struct EstimatorState {
    recent: HashMap<u32, VecDeque<u64>>,
}

impl EstimatorState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_completion(&mut self, user_id: u32, reference_runtime_s: u64) {
        let q = self.recent.entry(user_id).or_default();
        if q.len() == HISTORY {
            q.pop_front();
        }
        q.push_back(reference_runtime_s);
    }

    pub fn history(&self, user_id: u32) -> Vec<u64> {
        self.recent.get(&user_id).map_or_else(Vec::new, |q| q.iter().copied().collect())
    }

    /// Estimated runtime on the reference machine.
    pub fn reference_estimate(&self, user_id: u32, user_estimate_s: u64) -> f64 {
        match self.recent.get(&user_id) {
            Some(q) if !q.is_empty() => q.iter().sum::<u64>() as f64 / q.len() as f64,
            _ => user_estimate_s as f64,
        }
    }

    pub fn estimate_runtime(&self, job: &Job, ty: &InstanceType) -> u64 {
        let reference = self.reference_estimate(job.user_id, job.user_estimate_s);
        scale_reference(reference, job.moldability, ty)
    }
}
