//! Job attributes that SWF traces lack: moldability, user estimates and
//! deadlines.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::job::{Job, Moldability};
use super::swf::SwfRecord;
use crate::des::SimTime;
use crate::error::{Error, Result};
use crate::rng::{streams, RandomStreams};

/// `log2(A) ~ U[lo, hi]`, `sigma ~ U[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MoldabilityParams {
    pub log2_parallelism: (f64, f64),
    pub variance: (f64, f64),
}

impl Default for MoldabilityParams {
    fn default() -> Self {
        MoldabilityParams {
            log2_parallelism: (0.0, 5.0),
            variance: (0.0, 2.0),
        }
    }
}

/// Over-estimation factor drawn from a discrete distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimateParams {
    pub factors: Vec<f64>,
    /// Relative weights; empty means uniform.
    pub weights: Vec<f64>,
}

impl Default for EstimateParams {
    fn default() -> Self {
        EstimateParams {
            factors: vec![1.0, 1.5, 2.0, 3.0, 5.0, 10.0],
            weights: vec![],
        }
    }
}

/// Deadline multiplier on the user estimate, `u ~ U[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeadlineParams {
    pub multiplier: (f64, f64),
}

impl Default for DeadlineParams {
    fn default() -> Self {
        DeadlineParams { multiplier: (1.5, 4.0) }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadModel {
    pub moldability: MoldabilityParams,
    pub estimates: EstimateParams,
    pub deadlines: DeadlineParams,
}

impl WorkloadModel {
    pub fn validate(&self) -> Result<()> {
        let (a0, a1) = self.moldability.log2_parallelism;
        let (s0, s1) = self.moldability.variance;
        let (d0, d1) = self.deadlines.multiplier;
        let e = &self.estimates;
        let ok = 0.0 <= a0
            && a0 <= a1
            && 0.0 <= s0
            && s0 <= s1
            && 0.0 < d0
            && d0 <= d1
            && !e.factors.is_empty()
            && e.factors.iter().all(|f| *f >= 1.0)
            && (e.weights.is_empty()
                || (e.weights.len() == e.factors.len()
                    && e.weights.iter().all(|w| *w >= 0.0)
                    && e.weights.iter().sum::<f64>() > 0.0));
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid workload model {self:?}")))
        }
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

pub fn generate_moldability<R: Rng>(rng: &mut R, params: &MoldabilityParams) -> Moldability {
    let log2_a = uniform(rng, params.log2_parallelism);
    let sigma = uniform(rng, params.variance);
    Moldability {
        parallelism: log2_a.exp2().max(1.0),
        variance: sigma.max(0.0),
    }
}

/// Reference-machine estimate, never below the actual runtime.
pub fn generate_user_estimate<R: Rng>(base_runtime_s: u64, rng: &mut R, params: &EstimateParams) -> u64 {
    let idx = if params.weights.is_empty() {
        rng.random_range(0..params.factors.len())
    } else {
        let total: f64 = params.weights.iter().sum();
        let mut x = rng.random::<f64>() * total;
        let mut pick = params.factors.len() - 1;
        for (i, w) in params.weights.iter().enumerate() {
            if x < *w {
                pick = i;
                break;
            }
            x -= w;
        }
        pick
    };
    let estimate = (base_runtime_s as f64 * params.factors[idx]).ceil() as u64;
    estimate.max(base_runtime_s)
}

pub fn assign_deadline<R: Rng>(submit: SimTime, user_estimate_s: u64, rng: &mut R, params: &DeadlineParams) -> SimTime {
    let u = uniform(rng, params.multiplier);
    submit + ((user_estimate_s as f64 * u).round() as SimTime).max(1)
}

/// Turns trace records into jobs whose submit times are shifted so the first
/// record lands at `start`. Each attribute uses its own sub-stream.
pub fn prepare_jobs(records: &[SwfRecord], start: SimTime, model: &WorkloadModel, streams: &RandomStreams) -> Vec<Job> {
    let mut mold_rng = streams.stream(streams::MOLDABILITY);
    let mut est_rng = streams.stream(streams::ESTIMATES);
    let mut ddl_rng = streams.stream(streams::DEADLINES);
    let first = records.first().map_or(0, |r| r.submit_time);
    records
        .iter()
        .map(|r| {
            let submit = start + (r.submit_time - first);
            let moldability = generate_moldability(&mut mold_rng, &model.moldability);
            let user_estimate_s = generate_user_estimate(r.run_time_s, &mut est_rng, &model.estimates);
            let deadline = assign_deadline(submit, user_estimate_s, &mut ddl_rng, &model.deadlines);
            Job {
                id: r.job_id,
                user_id: r.user_id,
                submit_time: submit,
                base_runtime_s: r.run_time_s,
                moldability,
                user_estimate_s,
                deadline,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moldability_first_draw_is_pinned() {
        let mut rng = RandomStreams::new(2011).stream(streams::MOLDABILITY);
        let m = generate_moldability(&mut rng, &MoldabilityParams::default());
        // recorded from this implementation
        assert_eq!((m.parallelism, m.variance), (PINNED_A, PINNED_SIGMA));
    }

    const PINNED_A: f64 = 1.021097222703329;
    const PINNED_SIGMA: f64 = 1.1175489656338407;

    #[test]
    fn moldability_support() {
        let mut rng = RandomStreams::new(5).stream(streams::MOLDABILITY);
        for _ in 0..10_000 {
            let m = generate_moldability(&mut rng, &MoldabilityParams::default());
            assert!(m.parallelism >= 1.0 && m.parallelism <= 32.0 + 1e-9);
            assert!(m.variance >= 0.0 && m.variance <= 2.0);
        }
    }

    #[test]
    fn fixed_serial_config() {
        let params = MoldabilityParams {
            log2_parallelism: (0.0, 0.0),
            variance: (0.0, 2.0),
        };
        let mut rng = RandomStreams::new(5).stream(streams::MOLDABILITY);
        for _ in 0..100 {
            assert_eq!(generate_moldability(&mut rng, &params).parallelism, 1.0);
        }
    }

    #[test]
    fn exact_estimates_with_unit_factor() {
        let params = EstimateParams {
            factors: vec![1.0],
            weights: vec![],
        };
        let mut rng = RandomStreams::new(1).stream(streams::ESTIMATES);
        assert_eq!(generate_user_estimate(4215, &mut rng, &params), 4215);
    }

    #[test]
    fn estimates_never_below_actual() {
        let mut rng = RandomStreams::new(1).stream(streams::ESTIMATES);
        for base in 1..10_001u64 {
            assert!(generate_user_estimate(base, &mut rng, &EstimateParams::default()) >= base);
        }
    }

    #[test]
    fn estimate_first_draw_is_pinned() {
        let mut rng = RandomStreams::new(2011).stream(streams::ESTIMATES);
        assert_eq!(generate_user_estimate(1000, &mut rng, &EstimateParams::default()), PINNED_ESTIMATE);
    }

    const PINNED_ESTIMATE: u64 = 1000;

    #[test]
    fn weighted_estimates_follow_weights() {
        let params = EstimateParams {
            factors: vec![1.0, 10.0],
            weights: vec![0.0, 1.0],
        };
        let mut rng = RandomStreams::new(1).stream(streams::ESTIMATES);
        for _ in 0..100 {
            assert_eq!(generate_user_estimate(100, &mut rng, &params), 1000);
        }
    }

    #[test]
    fn deadline_bounds() {
        let lo = DeadlineParams { multiplier: (1.5, 1.5) };
        let hi = DeadlineParams { multiplier: (4.0, 4.0) };
        let mut rng = RandomStreams::new(1).stream(streams::DEADLINES);
        assert_eq!(assign_deadline(100, 1000, &mut rng, &lo), 1600);
        assert_eq!(assign_deadline(100, 1000, &mut rng, &hi), 4100);
        for _ in 0..10_000 {
            let d = assign_deadline(0, 1000, &mut rng, &DeadlineParams::default());
            assert!((1500..=4000).contains(&d));
        }
    }

    #[test]
    fn model_validation() {
        assert!(WorkloadModel::default().validate().is_ok());
        let mut bad = WorkloadModel::default();
        bad.estimates.factors = vec![0.5];
        assert!(bad.validate().is_err());
    }
}
