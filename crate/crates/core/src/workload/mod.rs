//! Job streams: SWF ingestion, moldability, runtime estimates, deadlines and
//! the speedup model used to turn reference runtimes into per-type ones.

mod generate;
mod job;
mod speedup;
pub mod swf;

pub use generate::{
    assign_deadline, generate_moldability, generate_user_estimate, prepare_jobs, DeadlineParams,
    EstimateParams, MoldabilityParams, WorkloadModel,
};
pub use job::{Job, Moldability};
pub use speedup::{downey_speedup, execution_rate, runtime_on, scale_by_rate, scale_reference};
pub use swf::{parse_swf, synthetic_swf, write_swf, SwfRecord, SwfTrace, SyntheticSwfParams};
