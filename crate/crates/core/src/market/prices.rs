use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::catalog::{Catalog, MarketKey};
use crate::des::SimTime;
use crate::error::{Error, Result};
use crate::money::Micros;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PricePoint {
    pub at: SimTime,
    pub price: Micros,
}

/// Right-continuous step function of the spot price in one market. Holds
/// the last value beyond the final point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriceSeries {
    points: Vec<PricePoint>,
}

/// Price points covering `[start, end]`. The first point is clamped to
/// `start` when the step value there comes from an earlier change.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HistoryWindow {
    pub start: SimTime,
    pub end: SimTime,
    pub points: Vec<PricePoint>,
}

impl HistoryWindow {
    pub fn min(&self) -> Option<Micros> {
        self.points.iter().map(|p| p.price).min()
    }

    /// Mean of the step function over the window, each value weighted by how
    /// long it was in effect. A zero-length window yields the single value.
    pub fn time_weighted_mean(&self) -> Option<Micros> {
        let first = self.points.first()?;
        if self.end <= self.start {
            return Some(first.price);
        }
        let mut acc: i128 = 0;
        for (i, p) in self.points.iter().enumerate() {
            let until = self.points.get(i + 1).map_or(self.end, |n| n.at);
            acc += i128::from(p.price.0) * i128::from(until - p.at);
        }
        let span = i128::from(self.end - first.at);
        if span == 0 {
            return Some(self.points.last().expect("non-empty").price);
        }
        Some(Micros(div_round(acc, span) as i64))
    }

    pub fn unweighted_mean(&self) -> Option<Micros> {
        if self.points.is_empty() {
            return None;
        }
        let sum: i128 = self.points.iter().map(|p| i128::from(p.price.0)).sum();
        Some(Micros(div_round(sum, self.points.len() as i128) as i64))
    }
}

fn div_round(num: i128, den: i128) -> i128 {
    (num + den / 2) / den
}

impl PriceSeries {
    /// Sorts by timestamp; rejects duplicate timestamps and non-positive
    /// prices.
    pub fn new(mut points: Vec<PricePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("empty price series".into()));
        }
        points.sort_by_key(|p| p.at);
        if let Some(w) = points.windows(2).find(|w| w[0].at == w[1].at) {
            return Err(Error::Config(format!("duplicate price timestamp {}", w[0].at)));
        }
        if let Some(p) = points.iter().find(|p| !p.price.is_positive()) {
            return Err(Error::Config(format!("non-positive price at t={}", p.at)));
        }
        Ok(PriceSeries { points })
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    pub fn start(&self) -> SimTime {
        self.points[0].at
    }

    pub fn last_change(&self) -> SimTime {
        self.points[self.points.len() - 1].at
    }

    /// Index of the latest point with `at <= t`.
    fn index_at(&self, t: SimTime) -> Option<usize> {
        match self.points.partition_point(|p| p.at <= t) {
            0 => None,
            n => Some(n - 1),
        }
    }

    pub fn price_at(&self, t: SimTime) -> Option<Micros> {
        self.index_at(t).map(|i| self.points[i].price)
    }

    pub fn window(&self, t: SimTime, window: SimTime) -> HistoryWindow {
        let start = t.saturating_sub(window).max(self.start());
        if t < self.start() {
            return HistoryWindow {
                start: t,
                end: t,
                points: vec![],
            };
        }
        let lo = self.points.partition_point(|p| p.at < start);
        let hi = self.points.partition_point(|p| p.at <= t);
        let mut points = Vec::with_capacity(hi - lo + 1);
        if lo < self.points.len() && self.points[lo].at == start {
            // value at window start is already known
        } else if lo > 0 {
            points.push(PricePoint {
                at: start,
                price: self.points[lo - 1].price,
            });
        }
        points.extend_from_slice(&self.points[lo..hi]);
        HistoryWindow { start, end: t, points }
    }

    /// Point changes in `(from, to]`, for replaying into an event queue.
    pub fn changes_between(&self, from: SimTime, to: SimTime) -> &[PricePoint] {
        let lo = self.points.partition_point(|p| p.at <= from);
        let hi = self.points.partition_point(|p| p.at <= to);
        &self.points[lo..hi]
    }

    /// Sets the price from `t` onwards up to the next recorded change.
    pub(crate) fn upsert(&mut self, t: SimTime, price: Micros) {
        match self.points.binary_search_by_key(&t, |p| p.at) {
            Ok(i) => self.points[i].price = price,
            Err(i) => self.points.insert(i, PricePoint { at: t, price }),
        }
    }
}

/// One price series per offered market of a catalog.
#[derive(Clone, Debug)]
pub struct PriceBook {
    catalog: Arc<Catalog>,
    series: Vec<Arc<PriceSeries>>,
}

impl PriceBook {
    /// Builds a book from traces keyed by `(datacenter, type)` names. Every
    /// market of the catalog must have a series.
    pub fn new(catalog: Arc<Catalog>, mut traces: BTreeMap<(String, String), PriceSeries>) -> Result<Self> {
        let mut series: Vec<Option<Arc<PriceSeries>>> = vec![None; catalog.market_slots()];
        for market in catalog.markets() {
            let dc = catalog.datacenter(market.dc).id.clone();
            let ty = catalog.instance_type(market.ty).name.clone();
            let s = traces
                .remove(&(dc.clone(), ty.clone()))
                .or_else(|| {
                    let k = traces
                        .keys()
                        .find(|(d, t)| *d == dc && t.eq_ignore_ascii_case(&ty))
                        .cloned()?;
                    traces.remove(&k)
                })
                .ok_or_else(|| Error::Config(format!("market {dc}/{ty} has no price rows")))?;
            series[catalog.market_index(market)] = Some(Arc::new(s));
        }
        if let Some((dc, ty)) = traces.keys().next() {
            return Err(Error::Config(format!(
                "trace market {dc}/{ty} is not in the catalog"
            )));
        }
        Ok(PriceBook {
            catalog,
            series: series.into_iter().map(|s| s.unwrap_or_else(|| Arc::new(PriceSeries { points: vec![] }))).collect(),
        })
    }

    /// Builds a book whose datacenters are taken from the trace keys.
    pub fn from_traces(
        types: Vec<super::InstanceType>,
        traces: BTreeMap<(String, String), PriceSeries>,
    ) -> Result<Self> {
        let mut dcs: Vec<String> = traces.keys().map(|(d, _)| d.clone()).collect();
        dcs.dedup();
        let catalog = Arc::new(Catalog::new(types, dcs)?);
        PriceBook::new(catalog, traces)
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn series(&self, market: MarketKey) -> &PriceSeries {
        &self.series[self.catalog.market_index(market)]
    }

    pub(crate) fn series_mut(&mut self, market: MarketKey) -> &mut PriceSeries {
        let i = self.catalog.market_index(market);
        Arc::make_mut(&mut self.series[i])
    }

    pub fn current_price(&self, market: MarketKey, t: SimTime) -> Result<Micros> {
        self.series(market)
            .price_at(t)
            .ok_or_else(|| Error::NoPriceYet {
                market: self.catalog.market_label(market),
                at: t,
            })
    }

    pub fn history_window(&self, market: MarketKey, t: SimTime, window: SimTime) -> Result<HistoryWindow> {
        if window == 0 {
            return Err(Error::InvalidArgument("history window must be positive".into()));
        }
        Ok(self.series(market).window(t, window))
    }

    /// Latest first timestamp across all markets: the earliest time at which
    /// every market has a price.
    pub fn common_start(&self) -> SimTime {
        self.iter().map(|(_, s)| s.start()).max().unwrap_or(0)
    }

    pub fn last_change(&self) -> SimTime {
        self.iter().map(|(_, s)| s.last_change()).max().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (MarketKey, &PriceSeries)> + '_ {
        self.catalog
            .markets()
            .map(move |m| (m, self.series[self.catalog.market_index(m)].as_ref()))
    }
}
