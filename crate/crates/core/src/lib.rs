//! Trace-driven simulation of a cloud spot market and a fault-aware
//! provisioning broker for deadline-constrained, moldable jobs.
//!
//! The crate is layered bottom-up:
//!
//! - [`des`] and [`rng`]: event queue, virtual clock and seeded sub-streams.
//! - [`market`]: instance catalog, price series, provisioning and billing.
//! - [`workload`]: SWF ingestion, speedup model and job attributes.
//! - [`broker`]: runtime estimation, urgency, bidding strategies and
//!   placement decisions.
//! - [`fault`]: suspend/resume overheads and the fault-tolerance mechanisms.
//! - [`metrics`]: per-run accounting and replication statistics.
//! - [`simulation`]: one complete run wiring the above together.
//! - [`experiment`]: configuration, factor sweeps, reports and ranking.

pub mod broker;
pub mod des;
pub mod error;
pub mod experiment;
pub mod fault;
pub mod market;
pub mod metrics;
pub mod money;
pub mod rng;
pub mod simulation;
pub mod workload;

pub use error::{Error, Result};
pub use money::Micros;
