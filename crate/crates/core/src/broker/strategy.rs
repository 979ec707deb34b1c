//! Bidding strategies, selected by name at runtime.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::HistoryWindow;
use crate::money::{Micros, BID_GRANULARITY};

/// Everything a strategy may look at when pricing one request.
#[derive(Clone, Copy, Debug)]
pub struct BidInputs<'a> {
    /// One week of the target market's history, ending now.
    pub history: &'a HistoryWindow,
    pub current: Micros,
    pub on_demand: Micros,
}

pub trait BiddingStrategy: Send + Sync + fmt::Debug {
    /// Canonical registry name.
    fn name(&self) -> &'static str;

    /// Maximum USD/hour to pay for one instance.
    fn bid(&self, inputs: &BidInputs<'_>) -> Result<Micros>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanWeighting {
    /// Each price weighted by how long it was in effect.
    #[default]
    Time,
    /// Plain mean of the change points in the window.
    Points,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyOptions {
    pub mean_weighting: MeanWeighting,
    pub high_bid: Micros,
}

impl Default for StrategyOptions {
    fn default() -> Self {
        StrategyOptions {
            mean_weighting: MeanWeighting::Time,
            high_bid: Micros(100 * 1_000_000),
        }
    }
}

#[derive(Debug)]
pub struct Minimum;

impl BiddingStrategy for Minimum {
    fn name(&self) -> &'static str {
        "minimum"
    }

    fn bid(&self, inputs: &BidInputs<'_>) -> Result<Micros> {
        let min = inputs.history.min().ok_or(Error::EmptyHistory("minimum"))?;
        Ok(min + BID_GRANULARITY)
    }
}

#[derive(Debug)]
pub struct Mean {
    pub weighting: MeanWeighting,
}

impl BiddingStrategy for Mean {
    fn name(&self) -> &'static str {
        "mean"
    }

    fn bid(&self, inputs: &BidInputs<'_>) -> Result<Micros> {
        let mean = match self.weighting {
            MeanWeighting::Time => inputs.history.time_weighted_mean(),
            MeanWeighting::Points => inputs.history.unweighted_mean(),
        }
        .ok_or(Error::EmptyHistory("mean"))?;
        Ok(mean.max(BID_GRANULARITY))
    }
}

#[derive(Debug)]
pub struct OnDemand;

impl BiddingStrategy for OnDemand {
    fn name(&self) -> &'static str {
        "on-demand"
    }

    fn bid(&self, inputs: &BidInputs<'_>) -> Result<Micros> {
        Ok(inputs.on_demand.max(BID_GRANULARITY))
    }
}

#[derive(Debug)]
pub struct High {
    pub value: Micros,
}

impl BiddingStrategy for High {
    fn name(&self) -> &'static str {
        "high"
    }

    fn bid(&self, _inputs: &BidInputs<'_>) -> Result<Micros> {
        Ok(self.value)
    }
}

#[derive(Debug)]
pub struct Current;

impl BiddingStrategy for Current {
    fn name(&self) -> &'static str {
        "current"
    }

    fn bid(&self, inputs: &BidInputs<'_>) -> Result<Micros> {
        Ok(inputs.current + BID_GRANULARITY)
    }
}

pub type StrategyFactory = fn(&StrategyOptions) -> Box<dyn BiddingStrategy>;

struct Entry {
    name: &'static str,
    aliases: &'static [&'static str],
    factory: StrategyFactory,
}

/// Name-keyed set of strategy constructors.
pub struct StrategyRegistry {
    entries: Vec<Entry>,
}

impl fmt::Debug for StrategyRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

fn normalize(name: &str) -> String {
    name.chars()
        .filter(|c| !matches!(c, '-' | '_' | ' '))
        .flat_map(char::to_lowercase)
        .collect()
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry { entries: vec![] }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("minimum", &["min"], |_| Box::new(Minimum));
        r.register("mean", &[], |o| Box::new(Mean { weighting: o.mean_weighting }));
        r.register("on-demand", &["od"], |_| Box::new(OnDemand));
        r.register("high", &[], |o| Box::new(High { value: o.high_bid }));
        r.register("current", &[], |_| Box::new(Current));
        r
    }

    /// Adds or replaces a strategy.
    pub fn register(&mut self, name: &'static str, aliases: &'static [&'static str], factory: StrategyFactory) {
        self.entries.retain(|e| e.name != name);
        self.entries.push(Entry { name, aliases, factory });
    }

    fn find(&self, name: &str) -> Result<&Entry> {
        let key = normalize(name);
        self.entries
            .iter()
            .find(|e| normalize(e.name) == key || e.aliases.iter().any(|a| normalize(a) == key))
            .ok_or_else(|| Error::UnknownName {
                kind: "bidding strategy",
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    /// Canonical name for a user-supplied spelling.
    pub fn canonical(&self, name: &str) -> Result<&'static str> {
        self.find(name).map(|e| e.name)
    }

    pub fn create(&self, name: &str, options: &StrategyOptions) -> Result<Box<dyn BiddingStrategy>> {
        Ok((self.find(name)?.factory)(options))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name).collect()
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
