//! Per-job decision of a scheduling pass.
//!
//! In order: an idle VM whose paid hour covers the job; a busy VM that will be
//! free within the job's urgency slack; otherwise the bid check decides
//! between postponing and provisioning, and when provisioning, extending an
//! existing lease past its hour boundary competes with a new lease of the
//! preferred type on estimated cost: extra hours at the VM's current market
//! price against lag plus runtime hours at the bid. Ties go to the extension.

use serde::{Deserialize, Serialize};

use super::bid::{bid_check, BidDecision, MarketView};
use super::estimator::EstimatorState;
use super::strategy::BiddingStrategy;
use super::urgency::{urgency, UrgencyParams};
use crate::des::{SimTime, HOUR};
use crate::error::Result;
use crate::market::{Catalog, MarketKey, TypeId};
use crate::money::Micros;
use crate::workload::{scale_reference, Job};

/// Broker-side view of one leased (or about to be leased) VM.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VmView {
    pub id: usize,
    pub market: MarketKey,
    /// Actual lease start, or the expected one while pending.
    pub lease_start: SimTime,
    /// Estimated time at which all assigned work is done.
    pub idle_at: SimTime,
    /// Running with nothing assigned.
    pub idle: bool,
}

impl VmView {
    /// First hour boundary strictly after `t` (the lease start counts as the
    /// start of hour zero).
    pub fn paid_until(&self, t: SimTime) -> SimTime {
        if t < self.lease_start {
            return self.lease_start + HOUR;
        }
        let hours = (t - self.lease_start) / HOUR + 1;
        self.lease_start + hours * HOUR
    }

    /// First boundary at or after `x`, and never before the end of hour zero.
    pub fn boundary_covering(&self, x: SimTime) -> SimTime {
        if x <= self.lease_start + HOUR {
            return self.lease_start + HOUR;
        }
        let hours = (x - self.lease_start).div_ceil(HOUR);
        self.lease_start + hours * HOUR
    }
}

/// A job as seen by one pass.
#[derive(Clone, Copy, Debug)]
pub struct JobView<'a> {
    pub job: &'a Job,
    /// Estimated remaining runtime on each type, indexed by `TypeId`.
    pub estimates: &'a [u64],
    /// Market this copy must avoid (the sibling's, under duplication).
    pub forbidden: Option<MarketKey>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    IdleVm { vm: usize },
    QueueBehind { vm: usize },
    Extend { vm: usize },
    NewLease { market: MarketKey, bid: Micros },
    Postpone { until: SimTime },
}

pub struct PlacementContext<'a, M: MarketView + ?Sized> {
    pub market: &'a M,
    pub strategy: &'a dyn BiddingStrategy,
    pub urgency: UrgencyParams,
}

/// Estimated remaining runtime of `job` on every type of the catalog, given
/// `progress_ref_s` reference seconds already done.
pub fn estimates_by_type(catalog: &Catalog, estimator: &EstimatorState, job: &Job, progress_ref_s: f64) -> Vec<u64> {
    let total = estimator.reference_estimate(job.user_id, job.user_estimate_s);
    let remaining = (total - progress_ref_s).max(1.0);
    catalog
        .types()
        .iter()
        .map(|ty| scale_reference(remaining, job.moldability, ty))
        .collect()
}

/// The type with the most cores on which the job still runs for over an
/// hour (ties: more ECUs, then name); the smallest type if none does.
pub fn preferred_type(catalog: &Catalog, estimates: &[u64]) -> TypeId {
    let types = catalog.types();
    let long = catalog
        .type_ids()
        .filter(|t| estimates[t.0] > HOUR)
        .min_by(|a, b| {
            let (ta, tb) = (&types[a.0], &types[b.0]);
            tb.cores
                .cmp(&ta.cores)
                .then(tb.ecus.total_cmp(&ta.ecus))
                .then(ta.name.cmp(&tb.name))
        });
    long.unwrap_or_else(|| {
        catalog
            .type_ids()
            .min_by(|a, b| {
                let (ta, tb) = (&types[a.0], &types[b.0]);
                ta.cores
                    .cmp(&tb.cores)
                    .then(ta.ecus.total_cmp(&tb.ecus))
                    .then(ta.name.cmp(&tb.name))
            })
            .expect("catalog has types")
    })
}

pub fn place_job<M: MarketView + ?Sized>(
    job: &JobView<'_>,
    vms: &[VmView],
    t: SimTime,
    ctx: &PlacementContext<'_, M>,
) -> Result<Placement> {
    let catalog = ctx.market.catalog();
    let deadline = job.job.deadline;
    let est = |m: MarketKey| job.estimates[m.ty.0];
    let allowed = |vm: &&VmView| Some(vm.market) != job.forbidden;

    let preferred = preferred_type(catalog, job.estimates);
    let e = job.estimates[preferred.0];
    let slack = urgency(deadline, t, e, &ctx.urgency);
    // a job that cannot make it anyway still runs, wherever is cheapest
    let hopeless = t + ctx.urgency.provisioning_lag_s + e > deadline;
    let meets = |finish: SimTime| hopeless || finish <= deadline;

    // idle VM with enough paid time left in its current hour
    let idle = vms
        .iter()
        .filter(allowed)
        .filter(|vm| vm.idle && vm.lease_start <= t)
        .filter(|vm| vm.paid_until(t) - t >= est(vm.market) && meets(t + est(vm.market)))
        .min_by_key(|vm| (t + est(vm.market), vm.id));
    if let Some(vm) = idle {
        return Ok(Placement::IdleVm { vm: vm.id });
    }

    // busy VM that frees up within the slack and still meets the deadline
    let soon = vms
        .iter()
        .filter(allowed)
        .filter(|vm| !vm.idle)
        .filter(|vm| vm.idle_at.saturating_sub(t) <= slack && meets(vm.idle_at.max(t) + est(vm.market)))
        .min_by_key(|vm| (vm.idle_at.max(t) + est(vm.market), vm.id));
    if let Some(vm) = soon {
        return Ok(Placement::QueueBehind { vm: vm.id });
    }

    let dc = ctx
        .market
        .cheapest_datacenter(preferred, job.forbidden)
        .expect("some datacenter offers the preferred type");
    let target = MarketKey { dc, ty: preferred };
    match bid_check(ctx.strategy, target, ctx.market, t, deadline, e, &ctx.urgency)? {
        BidDecision::Recheck { at } => Ok(Placement::Postpone { until: at }),
        BidDecision::Provision { bid, .. } => {
            let new_cost = bid * (ctx.urgency.provisioning_lag_s + e).div_ceil(HOUR).max(1) as i64;
            let extension = vms
                .iter()
                .filter(allowed)
                .filter_map(|vm| {
                    let start = vm.idle_at.max(t);
                    let finish = start + est(vm.market);
                    // queueing behind work is step three's business
                    if !meets(finish) || (!hopeless && start - t > slack) {
                        return None;
                    }
                    let covered = vm.boundary_covering(vm.idle_at.max(t));
                    let extra_hours = finish.saturating_sub(covered).div_ceil(HOUR) as i64;
                    let cost = ctx.market.price(vm.market) * extra_hours;
                    Some((cost, finish, vm.id))
                })
                .min();
            match extension {
                Some((cost, _, vm)) if cost <= new_cost => Ok(Placement::Extend { vm }),
                _ => Ok(Placement::NewLease { market: target, bid }),
            }
        }
    }
}
