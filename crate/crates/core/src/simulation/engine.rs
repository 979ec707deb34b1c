use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use log::{debug, trace};

use super::{EventRecord, FailureRecord, RunResult, SimulationConfig};
use crate::broker::{
    place_job, BidInputs, BiddingStrategy, EstimatorState, JobView, MarketView, Placement,
    PlacementContext, UrgencyParams, VmView,
};
use crate::des::{EventHandle, EventQueue, SimTime, HOUR};
use crate::error::{Error, Result};
use crate::fault::{FailureContext, FaultTolerance, Recovery, RelocationOption, Snapshot};
use crate::market::{Catalog, InstanceId, MarketKey, PriceBook, Provider, RequestId, SpotRequest, SubmitOutcome};
use crate::metrics::MetricsRecorder;
use crate::money::{Micros, BID_GRANULARITY};
use crate::workload::{execution_rate, scale_by_rate, Job};

#[derive(Clone, Copy, Debug)]
enum Ev {
    Price { market: MarketKey, price: Micros },
    Arrival { job: usize },
    Pass,
    BidCheck { copy: usize },
    Ready { vm: usize },
    Boundary { vm: usize },
    SnapshotDone { vm: usize },
    Completion { vm: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Unscheduled,
    Assigned(usize),
    Awaiting(RequestId),
    Finished,
    Cancelled,
}

/// One schedulable copy of a job: the original or its replica.
#[derive(Debug)]
struct Copy {
    job: usize,
    replica: bool,
    sibling: Option<usize>,
    status: Status,
    snapshot: Option<Snapshot>,
    recheck: Option<(SimTime, EventHandle)>,
    /// Execution rate on each type.
    rates: Arc<[f64]>,
}

#[derive(Debug)]
struct Running {
    copy: usize,
    /// Reference seconds done as of `compute_from`.
    base_ref: f64,
    compute_from: SimTime,
    rate: f64,
    done: EventHandle,
}

#[derive(Debug)]
struct Vm {
    instance: InstanceId,
    request: RequestId,
    market: MarketKey,
    lease_start: SimTime,
    started: bool,
    alive: bool,
    running: Option<Running>,
    queue: VecDeque<usize>,
    ready_ev: Option<EventHandle>,
    boundary_ev: Option<EventHandle>,
    hours: u32,
    pending_snapshot: Option<(EventHandle, Snapshot)>,
    /// Re-fulfilment of a persistent request a checkpointed job waits on.
    resumes_await: bool,
}

impl Running {
    fn progress(&self, t: SimTime, total: f64) -> f64 {
        let computed = t.saturating_sub(self.compute_from) as f64 * self.rate;
        (self.base_ref + computed).min(total)
    }
}

struct Engine<'a> {
    provider: Provider,
    catalog: Arc<Catalog>,
    jobs: &'a [Job],
    strategy: &'a dyn BiddingStrategy,
    mechanism: &'a dyn FaultTolerance,
    cfg: &'a SimulationConfig,
    urgency: UrgencyParams,
    queue: EventQueue<Ev>,
    end: SimTime,
    copies: Vec<Copy>,
    unscheduled: BTreeSet<usize>,
    vms: Vec<Vm>,
    live: BTreeSet<usize>,
    awaiting: HashMap<RequestId, usize>,
    estimator: EstimatorState,
    recorder: MetricsRecorder,
    failures: Vec<FailureRecord>,
    events: Vec<EventRecord>,
    dirty: bool,
}

/// Runs `jobs` against the replayed `book` over `[start, start + horizon]`.
///
/// Job submission times are absolute trace times; jobs submitted outside the
/// horizon are ignored.
pub fn simulate(
    book: PriceBook,
    jobs: &[Job],
    start: SimTime,
    strategy: &dyn BiddingStrategy,
    mechanism: &dyn FaultTolerance,
    cfg: &SimulationConfig,
) -> Result<RunResult> {
    cfg.validate()?;
    let end = start + cfg.horizon_s;
    let catalog = book.catalog().clone();
    let mut queue = EventQueue::starting_at(start);
    for (market, series) in book.iter() {
        for p in series.changes_between(start, end) {
            queue.schedule(p.at, Ev::Price { market, price: p.price })?;
        }
    }
    for (i, job) in jobs.iter().enumerate() {
        if job.submit_time >= start && job.submit_time < end {
            queue.schedule(job.submit_time, Ev::Arrival { job: i })?;
        }
    }
    queue.schedule(start, Ev::Pass)?;
    let provider = Provider::new(book, start)?.with_lag(cfg.provisioning_lag_s);
    let urgency = UrgencyParams {
        alpha: cfg.alpha,
        provisioning_lag_s: cfg.provisioning_lag_s,
    };
    let mut engine = Engine {
        provider,
        catalog,
        jobs,
        strategy,
        mechanism,
        cfg,
        urgency,
        queue,
        end,
        copies: vec![],
        unscheduled: BTreeSet::new(),
        vms: vec![],
        live: BTreeSet::new(),
        awaiting: HashMap::new(),
        estimator: EstimatorState::new(),
        recorder: MetricsRecorder::new(),
        failures: vec![],
        events: vec![],
        dirty: false,
    };
    while let Some((t, _, ev)) = engine.queue.pop_until(end) {
        engine.handle(t, ev)?;
    }
    engine.finish()?;
    let metrics = engine.recorder.finalize(&engine.provider)?;
    debug!(
        "run {}..{} {} {} alpha={}: cost {} within {} violations {} failures {}",
        start,
        end,
        strategy.name(),
        mechanism.name(),
        cfg.alpha,
        metrics.total_cost,
        metrics.jobs_within_deadline,
        metrics.deadline_violations,
        metrics.failures_out_of_bid
    );
    Ok(RunResult {
        start,
        end,
        metrics,
        failures: engine.failures,
        events: engine.events,
    })
}

impl Engine<'_> {
    fn log(&mut self, record: EventRecord) {
        trace!("{record:?}");
        if self.cfg.record_events {
            self.events.push(record);
        }
    }

    fn handle(&mut self, t: SimTime, ev: Ev) -> Result<()> {
        match ev {
            Ev::Price { market, price } => self.on_price(t, market, price),
            Ev::Arrival { job } => self.on_arrival(t, job),
            Ev::Pass => self.on_pass(t),
            Ev::BidCheck { copy } => {
                self.copies[copy].recheck = None;
                if self.copies[copy].status == Status::Unscheduled {
                    self.try_place(copy, t, &mut None)?;
                }
                Ok(())
            }
            Ev::Ready { vm } => self.on_ready(t, vm),
            Ev::Boundary { vm } => self.on_boundary(t, vm),
            Ev::SnapshotDone { vm } => {
                self.on_snapshot_done(t, vm);
                Ok(())
            }
            Ev::Completion { vm } => self.on_completion(t, vm),
        }
    }

    fn job_of(&self, copy: usize) -> &Job {
        &self.jobs[self.copies[copy].job]
    }

    fn saved_ref(&self, copy: usize) -> f64 {
        self.copies[copy].snapshot.map_or(0.0, |s| s.progress_ref_s)
    }

    /// Same figures as [`crate::broker::estimates_by_type`], from the cached rates.
    fn estimates(&self, copy: usize, progress_ref: f64) -> Vec<u64> {
        let job = self.job_of(copy);
        let total = self.estimator.reference_estimate(job.user_id, job.user_estimate_s);
        let remaining = (total - progress_ref).max(1.0);
        self.copies[copy].rates.iter().map(|&r| scale_by_rate(remaining, r)).collect()
    }

    fn resume_time(&self, copy: usize, market: MarketKey) -> u64 {
        self.copies[copy].snapshot.map_or(0, |s| {
            self.cfg.rates.resume_time(s.size_mb, s.stored_in == market.dc)
        })
    }

    fn on_arrival(&mut self, t: SimTime, j: usize) -> Result<()> {
        let job = &self.jobs[j];
        self.recorder.record_submission(job.id)?;
        let rates: Arc<[f64]> = self
            .catalog
            .types()
            .iter()
            .map(|ty| execution_rate(job.moldability, ty))
            .collect();
        let original = self.copies.len();
        self.copies.push(Copy {
            job: j,
            replica: false,
            sibling: None,
            status: Status::Unscheduled,
            snapshot: None,
            recheck: None,
            rates: rates.clone(),
        });
        self.unscheduled.insert(original);
        let estimates = self.estimates(original, 0.0);
        let preferred = crate::broker::preferred_type(&self.catalog, &estimates);
        let replicated = self.mechanism.replicate(estimates[preferred.0]);
        if replicated {
            let replica = self.copies.len();
            self.copies.push(Copy {
                job: j,
                replica: true,
                sibling: Some(original),
                status: Status::Unscheduled,
                snapshot: None,
                recheck: None,
                rates,
            });
            self.copies[original].sibling = Some(replica);
            self.unscheduled.insert(replica);
        }
        self.dirty = true;
        self.log(EventRecord::Arrival { at: t, job: job.id, replicated });
        Ok(())
    }

    fn on_pass(&mut self, t: SimTime) -> Result<()> {
        let next = t + self.cfg.schedule_interval_s;
        if next <= self.end {
            self.queue.schedule(next, Ev::Pass)?;
        }
        if !self.dirty {
            return Ok(());
        }
        self.dirty = false;
        let pending: Vec<usize> = self.unscheduled.iter().copied().collect();
        let mut views = None;
        for c in pending {
            if self.copies[c].status == Status::Unscheduled {
                self.try_place(c, t, &mut views)?;
            }
        }
        Ok(())
    }

    fn vm_views(&self, t: SimTime) -> Vec<VmView> {
        self.live
            .iter()
            .map(|&id| {
                let vm = &self.vms[id];
                let ty = vm.market.ty.0;
                let mut at = if vm.started { t } else { vm.lease_start.max(t) };
                if let Some(run) = &vm.running {
                    let job = self.job_of(run.copy);
                    let est = self.estimator.reference_estimate(job.user_id, job.user_estimate_s);
                    let done = run.progress(t, job.base_runtime_s as f64);
                    at = at.max(run.compute_from) + scale_by_rate(est - done, run.rate);
                }
                for &c in &vm.queue {
                    let job = self.job_of(c);
                    let est = self.estimator.reference_estimate(job.user_id, job.user_estimate_s);
                    let rate = self.copies[c].rates[ty];
                    at += self.resume_time(c, vm.market) + scale_by_rate(est - self.saved_ref(c), rate);
                }
                VmView {
                    id,
                    market: vm.market,
                    lease_start: vm.lease_start,
                    idle_at: at,
                    idle: vm.started && vm.running.is_none() && vm.queue.is_empty(),
                }
            })
            .collect()
    }

    fn sibling_market(&self, copy: usize) -> Option<MarketKey> {
        let sib = self.copies[copy].sibling?;
        match self.copies[sib].status {
            Status::Assigned(vm) => Some(self.vms[vm].market),
            Status::Awaiting(req) => Some(self.provider.request_market(req)),
            _ => None,
        }
    }

    /// `views` caches the VM views of the current pass; any placement that
    /// touches a VM invalidates it.
    fn try_place(&mut self, c: usize, t: SimTime, views: &mut Option<Vec<VmView>>) -> Result<()> {
        let estimates = self.estimates(c, self.saved_ref(c));
        if views.is_none() {
            *views = Some(self.vm_views(t));
        }
        let forbidden = self.sibling_market(c);
        let job = self.job_of(c);
        let view = JobView {
            job,
            estimates: &estimates,
            forbidden,
        };
        let ctx = PlacementContext {
            market: &self.provider,
            strategy: self.strategy,
            urgency: self.urgency,
        };
        let placement = place_job(&view, views.as_deref().unwrap_or_default(), t, &ctx)?;
        match placement {
            Placement::IdleVm { vm } | Placement::QueueBehind { vm } | Placement::Extend { vm } => {
                *views = None;
                self.assign(c, vm, t)?;
            }
            Placement::NewLease { market, bid } => {
                *views = None;
                if let Some(vm) = self.lease(market, bid, t)? {
                    self.assign(c, vm, t)?;
                }
            }
            Placement::Postpone { until } => {
                if self.copies[c].recheck.is_some_and(|(at, _)| at == until) || until > self.end {
                    return Ok(());
                }
                if let Some((_, h)) = self.copies[c].recheck.take() {
                    self.queue.cancel(h);
                }
                let h = self.queue.schedule(until, Ev::BidCheck { copy: c })?;
                self.copies[c].recheck = Some((until, h));
            }
        }
        Ok(())
    }

    /// Requests a fresh instance; returns its VM slot when fulfilled.
    fn lease(&mut self, market: MarketKey, bid: Micros, t: SimTime) -> Result<Option<usize>> {
        let req = SpotRequest {
            instance_type: market.ty,
            bid,
            datacenter: Some(market.dc),
            persistent: self.mechanism.persistent_requests(),
        };
        match self.provider.submit_request(req, t)? {
            SubmitOutcome::Provisioning { request, instance, ready_at } => {
                let vm = self.add_vm(instance, request, ready_at, false)?;
                let label = self.catalog.market_label(market);
                self.log(EventRecord::Lease { at: t, instance: instance.0, market: label, bid });
                Ok(Some(vm))
            }
            SubmitOutcome::Waiting { request } => {
                self.provider.close_request(request, t)?;
                Ok(None)
            }
            SubmitOutcome::Rejected { .. } => Ok(None),
        }
    }

    fn add_vm(&mut self, instance: InstanceId, request: RequestId, ready_at: SimTime, resumes_await: bool) -> Result<usize> {
        let id = instance.0 as usize;
        if id != self.vms.len() {
            return Err(Error::Accounting(format!("{instance} out of sequence")));
        }
        let ready_ev = self.queue.schedule(ready_at, Ev::Ready { vm: id })?;
        self.vms.push(Vm {
            instance,
            request,
            market: self.provider.instance(instance).market,
            lease_start: ready_at,
            started: false,
            alive: true,
            running: None,
            queue: VecDeque::new(),
            ready_ev: Some(ready_ev),
            boundary_ev: None,
            hours: 0,
            pending_snapshot: None,
            resumes_await,
        });
        self.live.insert(id);
        Ok(id)
    }

    fn assign(&mut self, c: usize, vm: usize, t: SimTime) -> Result<()> {
        self.unscheduled.remove(&c);
        if let Some((_, h)) = self.copies[c].recheck.take() {
            self.queue.cancel(h);
        }
        self.copies[c].status = Status::Assigned(vm);
        self.dirty = true;
        let v = &mut self.vms[vm];
        if v.started && v.running.is_none() && v.queue.is_empty() {
            self.start_job(vm, c, t)
        } else {
            v.queue.push_back(c);
            Ok(())
        }
    }

    fn start_job(&mut self, vm: usize, c: usize, t: SimTime) -> Result<()> {
        let market = self.vms[vm].market;
        let resume_s = self.resume_time(c, market);
        let base_ref = self.saved_ref(c);
        let job = self.job_of(c);
        let (job_id, total) = (job.id, job.base_runtime_s as f64);
        let rate = self.copies[c].rates[market.ty.0];
        let compute_from = t + resume_s;
        let done_at = compute_from + scale_by_rate(total - base_ref, rate);
        let done = self.queue.schedule(done_at, Ev::Completion { vm })?;
        self.vms[vm].running = Some(Running {
            copy: c,
            base_ref,
            compute_from,
            rate,
            done,
        });
        let replica = self.copies[c].replica;
        let instance = self.vms[vm].instance.0;
        self.log(EventRecord::JobStart { at: t, instance, job: job_id, replica, resume_s });
        Ok(())
    }

    fn start_next(&mut self, vm: usize, t: SimTime) -> Result<()> {
        if let Some(next) = self.vms[vm].queue.pop_front() {
            self.start_job(vm, next, t)?;
        }
        Ok(())
    }

    fn on_ready(&mut self, t: SimTime, vm: usize) -> Result<()> {
        let v = &mut self.vms[vm];
        v.ready_ev = None;
        self.provider.finish_provisioning(v.instance, t)?;
        v.started = true;
        v.lease_start = t;
        v.boundary_ev = Some(self.queue.schedule(t + HOUR, Ev::Boundary { vm })?);
        let instance = v.instance.0;
        self.log(EventRecord::Started { at: t, instance });
        self.dirty = true;
        self.start_next(vm, t)
    }

    fn on_boundary(&mut self, t: SimTime, vm: usize) -> Result<()> {
        let v = &mut self.vms[vm];
        v.boundary_ev = None;
        v.hours += 1;
        if v.running.is_none() && v.queue.is_empty() {
            return self.terminate(vm, t);
        }
        v.boundary_ev = Some(self.queue.schedule(t + HOUR, Ev::Boundary { vm })?);
        let every = self.mechanism.snapshot_every_hours();
        if every == 0 || !v.hours.is_multiple_of(every) || v.pending_snapshot.is_some() {
            return Ok(());
        }
        let Some(run) = v.running.as_mut() else {
            return Ok(());
        };
        let job = &self.jobs[self.copies[run.copy].job];
        let ty = self.catalog.instance_type(v.market.ty);
        let suspend = self.cfg.rates.suspend_time(ty.memory_mb);
        let progress = run.progress(t, job.base_runtime_s as f64);
        // computation pauses while the state is written out
        self.queue.cancel(run.done);
        run.base_ref = progress;
        run.compute_from = run.compute_from.max(t) + suspend;
        let done_at = run.compute_from + scale_by_rate(job.base_runtime_s as f64 - progress, run.rate);
        run.done = self.queue.schedule(done_at, Ev::Completion { vm })?;
        let snapshot = Snapshot {
            instance: v.instance.0,
            progress_ref_s: progress,
            size_mb: ty.memory_mb,
            stored_in: v.market.dc,
            taken_at: t,
        };
        let h = self.queue.schedule(t + suspend, Ev::SnapshotDone { vm })?;
        v.pending_snapshot = Some((h, snapshot));
        Ok(())
    }

    fn on_snapshot_done(&mut self, t: SimTime, vm: usize) {
        let v = &mut self.vms[vm];
        let Some((_, snapshot)) = v.pending_snapshot.take() else {
            return;
        };
        let Some(run) = &v.running else {
            return;
        };
        let c = run.copy;
        self.copies[c].snapshot = Some(snapshot);
        let job = self.job_of(c).id;
        self.log(EventRecord::Snapshot {
            at: t,
            instance: snapshot.instance,
            job,
            progress_ref_s: snapshot.progress_ref_s,
        });
    }

    fn on_completion(&mut self, t: SimTime, vm: usize) -> Result<()> {
        let run = self.vms[vm].running.take().expect("completion on a busy VM");
        if let Some((h, _)) = self.vms[vm].pending_snapshot.take() {
            self.queue.cancel(h);
        }
        let c = run.copy;
        self.copies[c].status = Status::Finished;
        let job = self.job_of(c).clone();
        if self.recorder.outcome(job.id).is_none() {
            self.recorder.record_completion(job.id, t, job.deadline)?;
            self.estimator.record_completion(job.user_id, job.base_runtime_s);
        }
        let instance = self.vms[vm].instance.0;
        let replica = self.copies[c].replica;
        self.log(EventRecord::Completion { at: t, instance, job: job.id, replica });
        if let Some(s) = self.copies[c].sibling {
            self.cancel_copy(s, t)?;
        }
        self.dirty = true;
        self.start_next(vm, t)
    }

    fn cancel_copy(&mut self, c: usize, t: SimTime) -> Result<()> {
        match self.copies[c].status {
            Status::Finished | Status::Cancelled => return Ok(()),
            Status::Unscheduled => {
                self.unscheduled.remove(&c);
                if let Some((_, h)) = self.copies[c].recheck.take() {
                    self.queue.cancel(h);
                }
            }
            Status::Awaiting(req) => {
                self.awaiting.remove(&req);
                self.provider.close_request(req, t)?;
            }
            Status::Assigned(vm) => {
                let v = &mut self.vms[vm];
                if v.running.as_ref().is_some_and(|r| r.copy == c) {
                    let run = v.running.take().expect("checked above");
                    self.queue.cancel(run.done);
                    if let Some((h, _)) = v.pending_snapshot.take() {
                        self.queue.cancel(h);
                    }
                } else {
                    v.queue.retain(|&q| q != c);
                }
                if v.running.is_none() {
                    if v.queue.is_empty() {
                        self.terminate(vm, t)?;
                    } else if v.started {
                        self.start_next(vm, t)?;
                    }
                }
            }
        }
        self.copies[c].status = Status::Cancelled;
        let (job, replica) = (self.job_of(c).id, self.copies[c].replica);
        self.log(EventRecord::Cancelled { at: t, job, replica });
        Ok(())
    }

    fn clear_vm_events(&mut self, vm: usize) {
        self.live.remove(&vm);
        let v = &mut self.vms[vm];
        v.alive = false;
        for h in [v.ready_ev.take(), v.boundary_ev.take()].into_iter().flatten() {
            self.queue.cancel(h);
        }
        if let Some((h, _)) = v.pending_snapshot.take() {
            self.queue.cancel(h);
        }
        if let Some(run) = &v.running {
            self.queue.cancel(run.done);
        }
    }

    fn bill(&mut self, vm: usize, t: SimTime) -> Result<()> {
        let instance = self.vms[vm].instance;
        let inst = self.provider.instance(instance);
        let (cost, hours) = (inst.bill(), inst.charged_hours());
        self.recorder.record_bill(instance, cost, hours)?;
        self.log(EventRecord::Terminated { at: t, instance: instance.0, cost });
        Ok(())
    }

    /// Client-side termination of an idle (or emptied) VM.
    fn terminate(&mut self, vm: usize, t: SimTime) -> Result<()> {
        if !self.vms[vm].alive {
            return Ok(());
        }
        self.clear_vm_events(vm);
        self.provider.terminate_by_client(self.vms[vm].instance, t)?;
        self.dirty = true;
        self.bill(vm, t)
    }

    fn unschedule(&mut self, c: usize) {
        self.copies[c].status = Status::Unscheduled;
        self.unscheduled.insert(c);
        self.dirty = true;
    }

    fn on_price(&mut self, t: SimTime, market: MarketKey, price: Micros) -> Result<()> {
        let out = self.provider.apply_price_change(market, t, price)?;
        for inst in out.terminated {
            self.on_failure(inst.0 as usize, t)?;
        }
        for inst in out.withdrawn {
            self.on_withdrawn(inst.0 as usize, t)?;
        }
        for (req, inst, ready_at) in out.fulfilled {
            let awaited = self.awaiting.remove(&req);
            let vm = self.add_vm(inst, req, ready_at, awaited.is_some())?;
            match awaited {
                Some(c) => {
                    self.copies[c].status = Status::Assigned(vm);
                    self.vms[vm].queue.push_back(c);
                }
                None => {
                    self.clear_vm_events(vm);
                    self.provider.close_request(req, t)?;
                    self.bill(vm, t)?;
                }
            }
        }
        Ok(())
    }

    fn on_failure(&mut self, vm: usize, t: SimTime) -> Result<()> {
        self.recorder.record_failure();
        self.clear_vm_events(vm);
        self.bill(vm, t)?;
        let (instance, market, request) = (self.vms[vm].instance, self.vms[vm].market, self.vms[vm].request);
        self.log(EventRecord::Failure { at: t, instance: instance.0 });
        let queued: Vec<usize> = self.vms[vm].queue.drain(..).collect();
        for c in queued {
            self.unschedule(c);
        }
        let ty = self.catalog.instance_type(market.ty).clone();
        let suspend_s = self.cfg.rates.suspend_time(ty.memory_mb);
        let mut record = FailureRecord {
            at: t,
            instance: instance.0,
            market: self.catalog.market_label(market),
            job: None,
            replica: false,
            lost_work_s: 0.0,
            suspend_s,
            recovery: None,
        };
        match self.vms[vm].running.take() {
            None => {
                if self.mechanism.persistent_requests() {
                    self.provider.close_request(request, t)?;
                }
            }
            Some(run) => {
                let c = run.copy;
                let job = self.job_of(c);
                let total = job.base_runtime_s as f64;
                let restorable = self.saved_ref(c);
                let lost_ref = (run.progress(t, total) - restorable).max(0.0);
                record.job = Some(job.id);
                record.replica = self.copies[c].replica;
                record.lost_work_s = lost_ref / run.rate;
                let remaining = self.estimates(c, restorable);
                let ctx = FailureContext {
                    market: &self.provider,
                    failed: market,
                    remaining: &remaining,
                    snapshot_mb: self.copies[c].snapshot.map(|s| s.size_mb),
                    rates: &self.cfg.rates,
                };
                let recovery = self.mechanism.on_failure(&ctx);
                record.recovery = Some(recovery);
                match recovery {
                    Recovery::Restart => {
                        self.copies[c].snapshot = None;
                        self.unschedule(c);
                    }
                    Recovery::AwaitOriginalRequest => {
                        self.copies[c].status = Status::Awaiting(request);
                        self.awaiting.insert(request, c);
                    }
                    Recovery::Relocate(option) => self.relocate(c, option, t)?,
                }
            }
        }
        self.failures.push(record);
        self.dirty = true;
        Ok(())
    }

    fn relocate(&mut self, c: usize, option: RelocationOption, t: SimTime) -> Result<()> {
        let market = option.market;
        let current = self.provider.price(market);
        let history = MarketView::history(&self.provider, market, t);
        let mut bid = self.strategy.bid(&BidInputs {
            history: &history,
            current,
            on_demand: self.catalog.instance_type(market.ty).on_demand,
        })?;
        if bid <= current {
            bid = current + BID_GRANULARITY;
        }
        match self.lease(market, bid, t)? {
            Some(vm) => {
                self.copies[c].status = Status::Assigned(vm);
                self.vms[vm].queue.push_back(c);
            }
            None => self.unschedule(c),
        }
        Ok(())
    }

    fn on_withdrawn(&mut self, vm: usize, t: SimTime) -> Result<()> {
        self.clear_vm_events(vm);
        self.bill(vm, t)?;
        let instance = self.vms[vm].instance.0;
        self.log(EventRecord::Withdrawn { at: t, instance });
        let request = self.vms[vm].request;
        let queued: Vec<usize> = self.vms[vm].queue.drain(..).collect();
        let mut rewaiting = false;
        for (i, c) in queued.into_iter().enumerate() {
            if i == 0 && self.vms[vm].resumes_await {
                self.copies[c].status = Status::Awaiting(request);
                self.awaiting.insert(request, c);
                rewaiting = true;
            } else {
                self.unschedule(c);
            }
        }
        if self.mechanism.persistent_requests() && !rewaiting {
            self.provider.close_request(request, t)?;
        }
        Ok(())
    }

    /// Ends every lease at the horizon and settles unfinished jobs.
    fn finish(&mut self) -> Result<()> {
        let t = self.end;
        let live: Vec<usize> = self.live.iter().copied().collect();
        for vm in live {
            self.terminate(vm, t)?;
        }
        let mut waiting: Vec<RequestId> = self.awaiting.keys().copied().collect();
        waiting.sort();
        for req in waiting {
            self.provider.close_request(req, t)?;
        }
        let mut seen = BTreeSet::new();
        for copy in &self.copies {
            let job = &self.jobs[copy.job];
            if seen.insert(job.id) && self.recorder.outcome(job.id).is_none() {
                self.recorder.record_unfinished(job.id, job.deadline, t)?;
            }
        }
        Ok(())
    }
}
