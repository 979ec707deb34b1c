//! Client-side policy: runtime estimation, preferred types, urgency, bidding
//! strategies, the bid check and the per-job placement decision of each
//! scheduling pass.

mod bid;
mod estimator;
mod placement;
pub mod strategy;
mod urgency;

pub use bid::{bid_check, BidDecision, MarketView};
pub use estimator::EstimatorState;
pub use placement::{
    estimates_by_type, place_job, preferred_type, JobView, Placement, PlacementContext, VmView,
};
pub use strategy::{BidInputs, BiddingStrategy, MeanWeighting, StrategyOptions, StrategyRegistry};
pub use urgency::{urgency, UrgencyParams};
