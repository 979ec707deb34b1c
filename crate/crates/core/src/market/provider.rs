//! Provider-side request and lease bookkeeping.
//!
//! Instances run while their bid is strictly above the market price and are
//! terminated without notice as soon as the price reaches the bid. Each lease
//! hour costs the spot price at the start of that hour. A partial final hour
//! is free when the provider terminates the instance and charged in full
//! when the client does.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::catalog::{Catalog, DcId, MarketKey, TypeId};
use super::prices::{PriceBook, PriceSeries};
use crate::des::{SimTime, HOUR};
use crate::error::{Error, Result};
use crate::money::{Micros, BID_GRANULARITY};

/// Time from fulfilment to a running VM (`B`).
pub const PROVISIONING_LAG: SimTime = 300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RequestId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceId(pub u32);

impl std::fmt::Display for InstanceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "i-{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotRequest {
    pub instance_type: TypeId,
    pub bid: Micros,
    /// `None` lets the provider pick the cheapest datacenter.
    pub datacenter: Option<DcId>,
    /// Persistent requests re-open after an out-of-bid termination.
    pub persistent: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RequestState {
    Waiting,
    Fulfilled(InstanceId),
    Rejected,
    Closed,
}

#[derive(Clone, Debug)]
struct RequestRecord {
    spec: SpotRequest,
    market: MarketKey,
    state: RequestState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceState {
    Pending,
    Running,
    OutOfBidTerminated,
    ClientTerminated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BillingRecord {
    pub hour_index: u32,
    pub price_charged: Micros,
    pub charged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Provider,
    Client,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Instance {
    pub id: InstanceId,
    pub request: RequestId,
    pub market: MarketKey,
    pub bid: Micros,
    pub state: InstanceState,
    /// Expected while pending, actual once running.
    pub lease_start: SimTime,
    pub end: Option<SimTime>,
    /// Whether the lease actually started before termination.
    pub started: bool,
    pub billing: Vec<BillingRecord>,
}

impl Instance {
    pub fn is_live(&self) -> bool {
        matches!(self.state, InstanceState::Pending | InstanceState::Running)
    }

    pub fn bill(&self) -> Micros {
        self.billing
            .iter()
            .filter(|r| r.charged)
            .map(|r| r.price_charged)
            .sum()
    }

    pub fn charged_hours(&self) -> u32 {
        self.billing.iter().filter(|r| r.charged).count() as u32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubmitOutcome {
    /// Fulfilled; the instance is running at `ready_at`.
    Provisioning {
        request: RequestId,
        instance: InstanceId,
        ready_at: SimTime,
    },
    /// Persistent request queued until the market falls below the bid.
    Waiting { request: RequestId },
    Rejected { request: RequestId },
}

impl SubmitOutcome {
    pub fn request(&self) -> RequestId {
        match *self {
            SubmitOutcome::Provisioning { request, .. }
            | SubmitOutcome::Waiting { request }
            | SubmitOutcome::Rejected { request } => request,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PriceChangeOutcome {
    /// Running instances terminated out-of-bid.
    pub terminated: Vec<InstanceId>,
    /// Pending instances whose fulfilment was withdrawn before start.
    pub withdrawn: Vec<InstanceId>,
    /// Waiting persistent requests that became fulfilled.
    pub fulfilled: Vec<(RequestId, InstanceId, SimTime)>,
}

/// Billing records for a lease over `[lease_start, end)`.
pub fn bill_lease(series: &PriceSeries, lease_start: SimTime, end: SimTime, by: Termination) -> Vec<BillingRecord> {
    let mut out = vec![];
    let mut hour = 0u32;
    loop {
        let start = lease_start + SimTime::from(hour) * HOUR;
        if start >= end {
            break;
        }
        let full = start + HOUR <= end;
        out.push(BillingRecord {
            hour_index: hour,
            price_charged: series.price_at(start).unwrap_or(Micros::ZERO),
            charged: full || by == Termination::Client,
        });
        hour += 1;
    }
    out
}

#[derive(Clone, Debug)]
pub struct Provider {
    book: PriceBook,
    /// Live price per market, as last applied.
    current: Vec<Micros>,
    requests: Vec<RequestRecord>,
    instances: Vec<Instance>,
    lag: SimTime,
}

impl Provider {
    /// Prices are initialized from the book at `t0`.
    pub fn new(book: PriceBook, t0: SimTime) -> Result<Self> {
        let catalog = book.catalog().clone();
        let mut current = vec![Micros::ZERO; catalog.market_slots()];
        for m in catalog.markets() {
            current[catalog.market_index(m)] = book.current_price(m, t0)?;
        }
        Ok(Provider {
            book,
            current,
            requests: vec![],
            instances: vec![],
            lag: PROVISIONING_LAG,
        })
    }

    pub fn with_lag(mut self, lag: SimTime) -> Self {
        self.lag = lag;
        self
    }

    pub fn lag(&self) -> SimTime {
        self.lag
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        self.book.catalog()
    }

    pub fn book(&self) -> &PriceBook {
        &self.book
    }

    pub fn price(&self, market: MarketKey) -> Micros {
        self.current[self.catalog().market_index(market)]
    }

    pub fn instance(&self, id: InstanceId) -> &Instance {
        &self.instances[id.0 as usize]
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn request_state(&self, id: RequestId) -> RequestState {
        self.requests[id.0 as usize].state
    }

    pub fn request_market(&self, id: RequestId) -> MarketKey {
        self.requests[id.0 as usize].market
    }

    /// Cheapest current price for `ty`; ties go to the lower datacenter index.
    pub fn cheapest_datacenter(&self, ty: TypeId, exclude: Option<MarketKey>) -> Option<DcId> {
        let catalog = self.catalog();
        catalog
            .dc_ids()
            .map(|dc| MarketKey { dc, ty })
            .filter(|m| catalog.offers(*m) && Some(*m) != exclude)
            .min_by_key(|m| (self.price(*m), m.dc))
            .map(|m| m.dc)
    }

    pub fn submit_request(&mut self, req: SpotRequest, t: SimTime) -> Result<SubmitOutcome> {
        let catalog = self.catalog().clone();
        if req.instance_type.0 >= catalog.types().len() {
            return Err(Error::UnknownType(format!("#{}", req.instance_type.0)));
        }
        if req.bid < BID_GRANULARITY {
            return Err(Error::InvalidArgument(format!("bid {} below granularity", req.bid)));
        }
        let dc = match req.datacenter {
            Some(dc) => {
                if dc.0 >= catalog.datacenters().len() {
                    return Err(Error::UnknownDatacenter(format!("#{}", dc.0)));
                }
                dc
            }
            None => self
                .cheapest_datacenter(req.instance_type, None)
                .ok_or_else(|| Error::UnknownType(catalog.instance_type(req.instance_type).name.clone()))?,
        };
        let market = MarketKey {
            dc,
            ty: req.instance_type,
        };
        if !catalog.offers(market) {
            return Err(Error::UnknownType(catalog.market_label(market)));
        }
        let id = RequestId(self.requests.len() as u32);
        let in_bid = req.bid > self.price(market);
        let persistent = req.persistent;
        self.requests.push(RequestRecord {
            spec: req,
            market,
            state: RequestState::Waiting,
        });
        if in_bid {
            let (instance, ready_at) = self.fulfil(id, t);
            Ok(SubmitOutcome::Provisioning {
                request: id,
                instance,
                ready_at,
            })
        } else if persistent {
            Ok(SubmitOutcome::Waiting { request: id })
        } else {
            self.requests[id.0 as usize].state = RequestState::Rejected;
            Ok(SubmitOutcome::Rejected { request: id })
        }
    }

    fn fulfil(&mut self, request: RequestId, t: SimTime) -> (InstanceId, SimTime) {
        let rec = &mut self.requests[request.0 as usize];
        let id = InstanceId(self.instances.len() as u32);
        let ready_at = t + self.lag;
        rec.state = RequestState::Fulfilled(id);
        self.instances.push(Instance {
            id,
            request,
            market: rec.market,
            bid: rec.spec.bid,
            state: InstanceState::Pending,
            lease_start: ready_at,
            end: None,
            started: false,
            billing: vec![],
        });
        (id, ready_at)
    }

    /// Moves a pending instance to running. The lease starts at `t`.
    pub fn finish_provisioning(&mut self, id: InstanceId, t: SimTime) -> Result<()> {
        let inst = &mut self.instances[id.0 as usize];
        if inst.state != InstanceState::Pending {
            return Err(Error::InvalidArgument(format!("{id} is not pending")));
        }
        inst.state = InstanceState::Running;
        inst.lease_start = t;
        inst.started = true;
        Ok(())
    }

    pub fn apply_price_change(&mut self, market: MarketKey, t: SimTime, new_price: Micros) -> Result<PriceChangeOutcome> {
        if !new_price.is_positive() {
            return Err(Error::InvalidArgument(format!("price {new_price} must be positive")));
        }
        let idx = self.catalog().market_index(market);
        self.current[idx] = new_price;
        if self.book.series(market).price_at(t) != Some(new_price) {
            self.book.series_mut(market).upsert(t, new_price);
        }
        let mut out = PriceChangeOutcome::default();

        let affected: Vec<InstanceId> = self
            .instances
            .iter()
            .filter(|i| i.market == market && i.is_live() && i.bid <= new_price)
            .map(|i| i.id)
            .collect();
        for id in affected {
            let state = self.instances[id.0 as usize].state;
            self.end_instance(id, t, Termination::Provider);
            if state == InstanceState::Running {
                out.terminated.push(id);
            } else {
                out.withdrawn.push(id);
            }
        }

        let ready: Vec<RequestId> = self
            .requests
            .iter()
            .enumerate()
            .filter(|(_, r)| r.market == market && r.state == RequestState::Waiting && r.spec.bid > new_price)
            .map(|(i, _)| RequestId(i as u32))
            .collect();
        for req in ready {
            let (inst, ready_at) = self.fulfil(req, t);
            out.fulfilled.push((req, inst, ready_at));
        }
        Ok(out)
    }

    fn end_instance(&mut self, id: InstanceId, t: SimTime, by: Termination) {
        let market = self.instances[id.0 as usize].market;
        let series = self.book.series(market);
        let inst = &mut self.instances[id.0 as usize];
        inst.billing = if inst.started {
            bill_lease(series, inst.lease_start, t, by)
        } else {
            vec![]
        };
        inst.end = Some(t);
        inst.state = match by {
            Termination::Provider => InstanceState::OutOfBidTerminated,
            Termination::Client => InstanceState::ClientTerminated,
        };
        let rec = &mut self.requests[inst.request.0 as usize];
        rec.state = match (by, rec.spec.persistent) {
            (Termination::Provider, true) => RequestState::Waiting,
            _ => RequestState::Closed,
        };
    }

    /// Terminates a running instance on the client's behalf and returns its
    /// final bill. A pending instance is withdrawn at no charge.
    pub fn terminate_by_client(&mut self, id: InstanceId, t: SimTime) -> Result<Micros> {
        let inst = self.instances.get(id.0 as usize).ok_or(Error::NotRunning(id.0))?;
        if !inst.is_live() {
            return Err(Error::NotRunning(id.0));
        }
        self.end_instance(id, t, Termination::Client);
        Ok(self.instances[id.0 as usize].bill())
    }

    /// Cancels a request, terminating its live instance if any.
    pub fn close_request(&mut self, id: RequestId, t: SimTime) -> Result<Option<Micros>> {
        let bill = match self.requests[id.0 as usize].state {
            RequestState::Fulfilled(inst) if self.instances[inst.0 as usize].is_live() => {
                Some(self.terminate_by_client(inst, t)?)
            }
            _ => None,
        };
        self.requests[id.0 as usize].state = RequestState::Closed;
        Ok(bill)
    }

    pub fn compute_bill(&self, id: InstanceId) -> Result<Micros> {
        let inst = self.instance(id);
        if inst.is_live() {
            return Err(Error::Accounting(format!("{id} has not terminated")));
        }
        Ok(inst.bill())
    }

    /// Sum of all terminated instances' bills.
    pub fn revenue(&self) -> Micros {
        self.instances.iter().filter(|i| !i.is_live()).map(|i| i.bill()).sum()
    }

    pub fn live_instances(&self) -> impl Iterator<Item = &Instance> {
        self.instances.iter().filter(|i| i.is_live())
    }
}
