//! Suspend/resume overheads and the fault-tolerance mechanisms.

mod mechanism;
mod overhead;

pub use mechanism::{
    cheapest_relocation, relocation_options, Checkpointing, Duplication, FailureContext, FaultTolerance,
    MechanismKind, MechanismOptions, MechanismRegistry, Migration, NoTolerance, Recovery, RelocationOption,
};
pub use overhead::{Snapshot, TransferRates};
