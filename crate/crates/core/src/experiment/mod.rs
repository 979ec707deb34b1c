//! Configuration, factor sweeps, reports and ranking.

mod config;
mod rank;
mod report;
mod sweep;

pub use config::{default_exclusions, ExperimentConfig, TypeSpec, SYNTHETIC};
pub use rank::{rank_cells, worsening_pct, RankedCell};
pub use report::{
    read_runs_csv, summarize, write_reports, write_runs_csv, write_summary_csv, CellSummary, RunRow, RUNS_CSV,
    RUNS_JSONL, SUMMARY_CSV,
};
pub use sweep::{
    load_inputs, plan, run_cell, run_sweep, scenario, synthetic_book, synthetic_workload, Cell, CellRun, Scenario,
    SweepInputs, SweepOutcome, SweepPlan,
};
