use serde::{Deserialize, Serialize};

use super::strategy::{BidInputs, BiddingStrategy};
use super::urgency::{urgency, UrgencyParams};
use crate::des::SimTime;
use crate::error::Result;
use crate::market::{Catalog, DcId, HistoryWindow, MarketKey, Provider, TypeId};
use crate::money::{Micros, BID_GRANULARITY};

/// Price history fed to the strategies: one week per market.
pub const HISTORY_WINDOW: SimTime = 7 * 86_400;

/// Read-only market information the broker relies on.
pub trait MarketView {
    fn catalog(&self) -> &Catalog;
    fn price(&self, market: MarketKey) -> Micros;
    fn history(&self, market: MarketKey, t: SimTime) -> HistoryWindow;
    fn cheapest_datacenter(&self, ty: TypeId, exclude: Option<MarketKey>) -> Option<DcId>;
}

impl MarketView for Provider {
    fn catalog(&self) -> &Catalog {
        Provider::catalog(self)
    }

    fn price(&self, market: MarketKey) -> Micros {
        Provider::price(self, market)
    }

    fn history(&self, market: MarketKey, t: SimTime) -> HistoryWindow {
        self.book().series(market).window(t, HISTORY_WINDOW)
    }

    fn cheapest_datacenter(&self, ty: TypeId, exclude: Option<MarketKey>) -> Option<DcId> {
        Provider::cheapest_datacenter(self, ty, exclude)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BidDecision {
    Provision { bid: Micros, current: Micros },
    Recheck { at: SimTime },
}

/// Decides whether to provision now, and at what bid, or when to look again.
///
/// With zero urgency slack the strategy's bid is raised to `P + G` if it
/// would not beat the current price `P`. Otherwise the check is deferred to
/// `t + U`. The bid is only priced when it is used.
pub fn bid_check<M: MarketView + ?Sized>(
    strategy: &dyn BiddingStrategy,
    market: MarketKey,
    view: &M,
    t: SimTime,
    deadline: SimTime,
    estimate_s: u64,
    params: &UrgencyParams,
) -> Result<BidDecision> {
    let slack = urgency(deadline, t, estimate_s, params);
    if slack > 0 {
        return Ok(BidDecision::Recheck { at: t + slack });
    }
    let current = view.price(market);
    let history = view.history(market, t);
    let mut bid = strategy.bid(&BidInputs {
        history: &history,
        current,
        on_demand: view.catalog().instance_type(market.ty).on_demand,
    })?;
    if bid <= current {
        bid = current + BID_GRANULARITY;
    }
    Ok(BidDecision::Provision { bid, current })
}
