//! Provider side of the model: instance catalog, per-market spot prices,
//! bid-gated provisioning and hour-granularity billing.

mod catalog;
mod prices;
mod provider;
pub mod synthetic;
pub mod trace;

pub use catalog::{Catalog, Datacenter, DcId, InstanceType, MarketKey, TypeId};
pub use prices::{HistoryWindow, PriceBook, PricePoint, PriceSeries};
pub use provider::{
    bill_lease, BillingRecord, Instance, InstanceId, InstanceState, PriceChangeOutcome, Provider,
    RequestId, RequestState, SpotRequest, SubmitOutcome, Termination, PROVISIONING_LAG,
};
