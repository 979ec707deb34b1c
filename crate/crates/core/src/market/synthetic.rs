//! Seeded piecewise-constant price generator for tests and experiments.
//!
//! Each market follows a mean-reverting random walk in log price around a
//! base level drawn relative to the on-demand price. Changes arrive with
//! exponential inter-arrival times. Occasional spikes jump above the
//! on-demand price for an exponentially distributed duration.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::catalog::Catalog;
use super::prices::{PriceBook, PricePoint, PriceSeries};
use crate::des::SimTime;
use crate::error::{Error, Result};
use crate::money::{Micros, BID_GRANULARITY};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticPriceParams {
    pub days: u32,
    pub mean_change_interval_s: f64,
    /// Range of each market's base price as a fraction of on-demand.
    pub base_fraction: (f64, f64),
    /// Standard deviation of one log-price step.
    pub volatility: f64,
    /// Pull towards the base level per step, in `[0, 1]`.
    pub reversion: f64,
    pub spike_probability: f64,
    /// Spike level as a multiple of on-demand.
    pub spike_multiplier: (f64, f64),
    pub spike_mean_duration_s: f64,
    /// Floor and cap as multiples of on-demand. The cap never exceeds 99 USD.
    pub floor_fraction: f64,
    pub cap_fraction: f64,
}

impl Default for SyntheticPriceParams {
    fn default() -> Self {
        SyntheticPriceParams {
            days: 100,
            mean_change_interval_s: 3600.0,
            base_fraction: (0.30, 0.45),
            volatility: 0.06,
            reversion: 0.15,
            spike_probability: 0.01,
            spike_multiplier: (1.2, 3.0),
            spike_mean_duration_s: 3.0 * 3600.0,
            floor_fraction: 0.2,
            cap_fraction: 10.0,
        }
    }
}

impl SyntheticPriceParams {
    /// Frequent changes and spikes; low bids fail often.
    pub fn volatile() -> Self {
        SyntheticPriceParams {
            mean_change_interval_s: 1200.0,
            volatility: 0.12,
            spike_probability: 0.03,
            spike_multiplier: (1.5, 5.0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.days > 0
            && self.mean_change_interval_s >= 1.0
            && 0.0 < self.base_fraction.0
            && self.base_fraction.0 <= self.base_fraction.1
            && self.volatility >= 0.0
            && (0.0..=1.0).contains(&self.reversion)
            && (0.0..=1.0).contains(&self.spike_probability)
            && 0.0 < self.spike_multiplier.0
            && self.spike_multiplier.0 <= self.spike_multiplier.1
            && self.spike_mean_duration_s >= 1.0
            && self.floor_fraction > 0.0
            && self.floor_fraction <= self.cap_fraction;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid synthetic price parameters {self:?}")))
        }
    }
}

fn quantize(dollars: f64) -> Micros {
    let g = BID_GRANULARITY.0;
    let m = Micros::from_dollars(dollars).0;
    Micros(((m + g / 2) / g * g).max(g))
}

/// Generates one series per market of `catalog`, starting at t=0.
pub fn generate<R: Rng>(catalog: Arc<Catalog>, params: &SyntheticPriceParams, rng: &mut R) -> Result<PriceBook> {
    params.validate()?;
    let end = SimTime::from(params.days) * 86_400;
    let gap = Exp::new(1.0 / params.mean_change_interval_s).expect("positive rate");
    let spike_len = Exp::new(1.0 / params.spike_mean_duration_s).expect("positive rate");
    let step = Normal::new(0.0, params.volatility).expect("finite sd");
    let mut traces = BTreeMap::new();
    for market in catalog.markets() {
        let ty = catalog.instance_type(market.ty);
        let od = ty.on_demand.dollars();
        let base = od * rng.random_range(params.base_fraction.0..=params.base_fraction.1);
        let floor = od * params.floor_fraction;
        let cap = (od * params.cap_fraction).min(99.0);
        let mu = base.ln();
        let mut x = mu;
        let mut t: SimTime = 0;
        let mut points = vec![PricePoint {
            at: 0,
            price: quantize(base.clamp(floor, cap)),
        }];
        let push = |points: &mut Vec<PricePoint>, at: SimTime, dollars: f64| {
            let price = quantize(dollars.clamp(floor, cap));
            if points.last().is_some_and(|p| p.price != price) {
                points.push(PricePoint { at, price });
            }
        };
        loop {
            t += (gap.sample(rng).round() as SimTime).max(1);
            if t >= end {
                break;
            }
            if rng.random_bool(params.spike_probability) {
                let level = od * rng.random_range(params.spike_multiplier.0..=params.spike_multiplier.1);
                push(&mut points, t, level);
                t += (spike_len.sample(rng).round() as SimTime).max(1);
                if t >= end {
                    break;
                }
                push(&mut points, t, x.exp());
                continue;
            }
            x += params.reversion * (mu - x) + step.sample(rng);
            push(&mut points, t, x.exp());
        }
        traces.insert(
            (
                catalog.datacenter(market.dc).id.clone(),
                ty.name.clone(),
            ),
            PriceSeries::new(points)?,
        );
    }
    PriceBook::new(catalog, traces)
}
