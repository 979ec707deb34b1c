//! Fault-tolerance mechanisms, selected by name at runtime.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::overhead::TransferRates;
use crate::broker::MarketView;
use crate::des::HOUR;
use crate::error::{Error, Result};
use crate::market::MarketKey;
use crate::money::Micros;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    None,
    Checkpointing,
    Migration,
    Duplication,
}

/// What an out-of-bid failure leaves behind, as seen by the mechanism.
pub struct FailureContext<'a> {
    pub market: &'a dyn MarketView,
    pub failed: MarketKey,
    /// Estimated remaining runtime on each type, from the restorable progress.
    pub remaining: &'a [u64],
    /// Size of the state to restore; `None` when nothing was saved.
    pub snapshot_mb: Option<u32>,
    pub rates: &'a TransferRates,
}

/// One candidate of the migration cost table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelocationOption {
    pub market: MarketKey,
    /// 1: same market, 2: same datacenter other type, 3: other datacenter.
    pub option: u8,
    pub resume_s: u64,
    /// Estimated cost of finishing there at the current price.
    pub cost: Micros,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recovery {
    /// Back to the scheduler with no progress.
    Restart,
    /// Wait for the same persistent request to be fulfilled again.
    AwaitOriginalRequest,
    Relocate(RelocationOption),
}

pub trait FaultTolerance: Send + Sync + fmt::Debug {
    /// Canonical registry name.
    fn name(&self) -> &'static str;
    fn kind(&self) -> MechanismKind;
    /// Snapshot every this many lease hours; 0 never snapshots.
    fn snapshot_every_hours(&self) -> u32 {
        0
    }
    fn persistent_requests(&self) -> bool {
        false
    }
    /// Whether a job with this estimate on its preferred type gets a replica.
    fn replicate(&self, _estimate_s: u64) -> bool {
        false
    }
    fn on_failure(&self, ctx: &FailureContext<'_>) -> Recovery;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MechanismOptions {
    pub snapshot_every_hours: u32,
    pub replicate_over_s: u64,
}

impl Default for MechanismOptions {
    fn default() -> Self {
        MechanismOptions {
            snapshot_every_hours: 1,
            replicate_over_s: HOUR,
        }
    }
}

#[derive(Debug)]
pub struct NoTolerance;

impl FaultTolerance for NoTolerance {
    fn name(&self) -> &'static str {
        "none"
    }
    fn kind(&self) -> MechanismKind {
        MechanismKind::None
    }
    fn on_failure(&self, _ctx: &FailureContext<'_>) -> Recovery {
        Recovery::Restart
    }
}

#[derive(Debug)]
pub struct Checkpointing {
    pub every_hours: u32,
}

impl FaultTolerance for Checkpointing {
    fn name(&self) -> &'static str {
        "checkpointing"
    }
    fn kind(&self) -> MechanismKind {
        MechanismKind::Checkpointing
    }
    fn snapshot_every_hours(&self) -> u32 {
        self.every_hours
    }
    fn persistent_requests(&self) -> bool {
        true
    }
    fn on_failure(&self, _ctx: &FailureContext<'_>) -> Recovery {
        Recovery::AwaitOriginalRequest
    }
}

#[derive(Debug)]
pub struct Migration {
    pub every_hours: u32,
}

impl FaultTolerance for Migration {
    fn name(&self) -> &'static str {
        "migration"
    }
    fn kind(&self) -> MechanismKind {
        MechanismKind::Migration
    }
    fn snapshot_every_hours(&self) -> u32 {
        self.every_hours
    }
    fn on_failure(&self, ctx: &FailureContext<'_>) -> Recovery {
        Recovery::Relocate(cheapest_relocation(ctx))
    }
}

#[derive(Debug)]
pub struct Duplication {
    pub over_s: u64,
}

impl FaultTolerance for Duplication {
    fn name(&self) -> &'static str {
        "duplication"
    }
    fn kind(&self) -> MechanismKind {
        MechanismKind::Duplication
    }
    fn replicate(&self, estimate_s: u64) -> bool {
        estimate_s > self.over_s
    }
    fn on_failure(&self, _ctx: &FailureContext<'_>) -> Recovery {
        Recovery::Restart
    }
}

/// Cost of finishing the job in every offered market.
pub fn relocation_options(ctx: &FailureContext<'_>) -> Vec<RelocationOption> {
    let catalog = ctx.market.catalog();
    catalog
        .markets()
        .map(|market| {
            let same_dc = market.dc == ctx.failed.dc;
            let option = match (same_dc, market.ty == ctx.failed.ty) {
                (true, true) => 1,
                (true, false) => 2,
                (false, _) => 3,
            };
            let resume_s = ctx.snapshot_mb.map_or(0, |mb| ctx.rates.resume_time(mb, same_dc));
            let hours = (resume_s + ctx.remaining[market.ty.0]).div_ceil(HOUR).max(1);
            RelocationOption {
                market,
                option,
                resume_s,
                cost: ctx.market.price(market) * hours as i64,
            }
        })
        .collect()
}

/// Cheapest option; ties prefer the lower option, then the lower market.
pub fn cheapest_relocation(ctx: &FailureContext<'_>) -> RelocationOption {
    relocation_options(ctx)
        .into_iter()
        .min_by_key(|o| (o.cost, o.option, o.market))
        .expect("catalog has markets")
}

pub type MechanismFactory = fn(&MechanismOptions) -> Box<dyn FaultTolerance>;

struct Entry {
    name: &'static str,
    aliases: &'static [&'static str],
    factory: MechanismFactory,
}

/// Name-keyed set of mechanism constructors.
pub struct MechanismRegistry {
    entries: Vec<Entry>,
}

impl fmt::Debug for MechanismRegistry {
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

impl MechanismRegistry {
    pub fn empty() -> Self {
        MechanismRegistry { entries: vec![] }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("none", &[], |_| Box::new(NoTolerance));
        r.register("checkpointing", &["checkpoint"], |o| {
            Box::new(Checkpointing { every_hours: o.snapshot_every_hours })
        });
        r.register("migration", &["migrate"], |o| Box::new(Migration { every_hours: o.snapshot_every_hours }));
        r.register("duplication", &["job-duplication", "replication"], |o| {
            Box::new(Duplication { over_s: o.replicate_over_s })
        });
        r
    }

    pub fn register(&mut self, name: &'static str, aliases: &'static [&'static str], factory: MechanismFactory) {
        self.entries.retain(|e| e.name != name);
        self.entries.push(Entry { name, aliases, factory });
    }

    fn find(&self, name: &str) -> Result<&Entry> {
        let key = normalize(name);
        self.entries
            .iter()
            .find(|e| normalize(e.name) == key || e.aliases.iter().any(|a| normalize(a) == key))
            .ok_or_else(|| Error::UnknownName {
                kind: "fault-tolerance mechanism",
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn canonical(&self, name: &str) -> Result<&'static str> {
        self.find(name).map(|e| e.name)
    }

    pub fn create(&self, name: &str, options: &MechanismOptions) -> Result<Box<dyn FaultTolerance>> {
        Ok((self.find(name)?.factory)(options))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name).collect()
    }
}

impl Default for MechanismRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::des::SimTime;
    use crate::market::{Catalog, DcId, HistoryWindow, InstanceType, PricePoint, TypeId};

    struct TableMarket {
        catalog: Catalog,
        prices: Vec<Vec<i64>>,
    }

    impl MarketView for TableMarket {
        fn catalog(&self) -> &Catalog {
            &self.catalog
        }
        fn price(&self, m: MarketKey) -> Micros {
            Micros(self.prices[m.dc.0][m.ty.0])
        }
        fn history(&self, m: MarketKey, t: SimTime) -> HistoryWindow {
            HistoryWindow { start: t, end: t, points: vec![PricePoint { at: t, price: self.price(m) }] }
        }
        fn cheapest_datacenter(&self, _: TypeId, _: Option<MarketKey>) -> Option<DcId> {
            Some(DcId(0))
        }
    }

    fn two_types() -> Vec<InstanceType> {
        vec![
            InstanceType::new("small", 1.0, 1, 1740, Micros(85_000)).unwrap(),
            InstanceType::new("big", 8.0, 4, 15360, Micros(680_000)).unwrap(),
        ]
    }

    fn ctx<'a>(m: &'a TableMarket, remaining: &'a [u64], rates: &'a TransferRates) -> FailureContext<'a> {
        FailureContext {
            market: m,
            failed: MarketKey { dc: DcId(0), ty: TypeId(0) },
            remaining,
            snapshot_mb: Some(1740),
            rates,
        }
    }

    #[test]
    fn spike_in_home_datacenter_moves_away() {
        let m = TableMarket {
            catalog: Catalog::new(two_types(), vec!["dc1".into(), "dc2".into()]).unwrap(),
            prices: vec![vec![500_000, 2_000_000], vec![30_000, 300_000]],
        };
        let rates = TransferRates::default();
        // 3570 s left: 22 s same-dc resume fits one hour, 43 s cross-dc needs two
        let remaining = [3570, 900];
        let c = ctx(&m, &remaining, &rates);
        let table = relocation_options(&c);
        let cost = |dc: usize, ty: usize| {
            table.iter().find(|o| o.market == MarketKey { dc: DcId(dc), ty: TypeId(ty) }).unwrap().cost
        };
        assert_eq!(cost(0, 0), Micros(500_000));
        assert_eq!(cost(0, 1), Micros(2_000_000));
        assert_eq!(cost(1, 0), Micros(60_000));
        assert_eq!(cost(1, 1), Micros(300_000));
        let best = cheapest_relocation(&c);
        assert_eq!(best.option, 3);
        assert_eq!(best.market, MarketKey { dc: DcId(1), ty: TypeId(0) });
        assert_eq!(best.resume_s, 43);
    }

    #[test]
    fn short_remainder_stays_in_place() {
        let m = TableMarket {
            catalog: Catalog::new(two_types(), vec!["dc1".into(), "dc2".into()]).unwrap(),
            prices: vec![vec![40_000, 400_000], vec![40_000, 400_000]],
        };
        let rates = TransferRates::default();
        let remaining = [100, 13];
        let best = cheapest_relocation(&ctx(&m, &remaining, &rates));
        assert_eq!(best.option, 1);
        assert_eq!(best.resume_s, 22);
    }

    #[test]
    fn no_snapshot_means_no_resume_cost() {
        let m = TableMarket {
            catalog: Catalog::new(two_types(), vec!["dc1".into()]).unwrap(),
            prices: vec![vec![40_000, 400_000]],
        };
        let rates = TransferRates::default();
        let remaining = [3600, 450];
        let mut c = ctx(&m, &remaining, &rates);
        c.snapshot_mb = None;
        let best = cheapest_relocation(&c);
        assert_eq!(best.resume_s, 0);
        assert_eq!(best.cost, Micros(40_000));
    }

    #[test]
    fn registry_and_flags() {
        let r = MechanismRegistry::builtin();
        let o = MechanismOptions::default();
        assert_eq!(r.names(), vec!["none", "checkpointing", "migration", "duplication"]);
        let d = r.create("Duplication", &o).unwrap();
        assert!(d.replicate(7200));
        assert!(!d.replicate(1800));
        assert!(!d.replicate(3600));
        let c = r.create("checkpointing", &o).unwrap();
        assert!(c.persistent_requests());
        assert_eq!(c.snapshot_every_hours(), 1);
        assert_eq!(r.create("none", &o).unwrap().snapshot_every_hours(), 0);
        assert_eq!(r.create("migrate", &o).unwrap().kind(), MechanismKind::Migration);
        assert!(r.create("teleport", &o).is_err());
    }
}
