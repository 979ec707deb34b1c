use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use log::info;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SYNTHETIC};
use crate::broker::StrategyRegistry;
use crate::des::SimTime;
use crate::error::{Error, Result};
use crate::fault::MechanismRegistry;
use crate::market::synthetic::generate;
use crate::market::trace::load_price_traces;
use crate::market::{Catalog, PriceBook};
use crate::rng::{streams, RandomStreams};
use crate::simulation::{simulate, RunResult};
use crate::workload::{parse_swf, prepare_jobs, synthetic_swf, Job, SwfRecord};

/// One factor combination of the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub strategy: String,
    pub alpha: f64,
    pub mechanism: String,
}

impl Cell {
    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.strategy, self.alpha, self.mechanism)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepPlan {
    pub cells: Vec<Cell>,
    pub skipped: Vec<Cell>,
}

/// Grid cells in configuration order, with canonical names.
pub fn plan(config: &ExperimentConfig) -> Result<SweepPlan> {
    config.validate()?;
    let strategies = StrategyRegistry::builtin();
    let mechanisms = MechanismRegistry::builtin();
    let mut out = SweepPlan::default();
    for s in &config.strategies {
        for &alpha in &config.alphas {
            for m in &config.mechanisms {
                let cell = Cell {
                    strategy: strategies.canonical(s)?.to_string(),
                    alpha,
                    mechanism: mechanisms.canonical(m)?.to_string(),
                };
                if out.cells.contains(&cell) || out.skipped.contains(&cell) {
                    continue;
                }
                if config.is_excluded(&cell.strategy, &cell.mechanism) {
                    out.skipped.push(cell);
                } else {
                    out.cells.push(cell);
                }
            }
        }
    }
    Ok(out)
}

/// Price book and workload records shared by every run of a sweep.
#[derive(Clone, Debug)]
pub struct SweepInputs {
    pub book: PriceBook,
    pub records: Vec<SwfRecord>,
}

/// The generated price trace a sweep with this config would use.
pub fn synthetic_book(config: &ExperimentConfig) -> Result<PriceBook> {
    let streams = RandomStreams::new(config.base_seed);
    let catalog = Arc::new(Catalog::new(config.instance_types()?, config.datacenters.clone())?);
    generate(catalog, &config.synthetic_prices, &mut streams.stream(streams::PRICES))
}

/// The generated workload a sweep with this config would use.
pub fn synthetic_workload(config: &ExperimentConfig) -> Result<Vec<SwfRecord>> {
    let streams = RandomStreams::new(config.base_seed);
    synthetic_swf(&config.synthetic_workload, &mut streams.stream(streams::WORKLOAD))
}

pub fn load_inputs(config: &ExperimentConfig) -> Result<SweepInputs> {
    let types = config.instance_types()?;
    let book = if config.prices == SYNTHETIC {
        synthetic_book(config)?
    } else {
        let path = Path::new(&config.prices);
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        PriceBook::from_traces(types, load_price_traces(BufReader::new(file))?)?
    };
    let mut records = if config.workload == SYNTHETIC {
        synthetic_workload(config)?
    } else {
        let path = Path::new(&config.workload);
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let trace = parse_swf(BufReader::new(file), config.jobs_limit)?;
        if trace.skipped > 0 {
            info!("{}: skipped {} records without a runtime", path.display(), trace.skipped);
        }
        trace.records
    };
    if let Some(limit) = config.jobs_limit {
        records.truncate(limit);
    }
    Ok(SweepInputs { book, records })
}

/// Workload of one replication, shared by all cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub replication: u32,
    pub seed: u64,
    pub start: SimTime,
    pub jobs: Vec<Job>,
}

/// Uniform start offset leaving the warm-up behind and the horizon inside
/// the trace.
pub fn scenario(inputs: &SweepInputs, config: &ExperimentConfig, replication: u32) -> Result<Scenario> {
    let seed = config.base_seed.wrapping_add(u64::from(replication));
    let streams = RandomStreams::new(seed);
    let first = inputs.book.common_start();
    let last = inputs.book.last_change();
    let horizon = config.horizon_s();
    let span = last.saturating_sub(first);
    if span < horizon {
        return Err(Error::Config(format!(
            "price trace covers {span} s, less than the {horizon} s horizon"
        )));
    }
    let lo = first + config.warmup_s().min(span - horizon);
    let hi = last - horizon;
    let start = streams.stream(streams::START_OFFSET).random_range(lo..=hi);
    let jobs = prepare_jobs(&inputs.records, start, &config.workload_model, &streams);
    Ok(Scenario {
        replication,
        seed,
        start,
        jobs,
    })
}

pub fn run_cell(inputs: &SweepInputs, scenario: &Scenario, cell: &Cell, config: &ExperimentConfig) -> Result<RunResult> {
    let strategy = StrategyRegistry::builtin().create(&cell.strategy, &config.strategy_options)?;
    let mechanism = MechanismRegistry::builtin().create(&cell.mechanism, &config.mechanism_options)?;
    simulate(
        inputs.book.clone(),
        &scenario.jobs,
        scenario.start,
        strategy.as_ref(),
        mechanism.as_ref(),
        &config.simulation(cell.alpha),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRun {
    pub cell: Cell,
    pub replication: u32,
    pub seed: u64,
    pub result: RunResult,
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutcome {
    /// Ordered by cell, then replication.
    pub runs: Vec<CellRun>,
    pub skipped: Vec<Cell>,
    /// Runs that failed or panicked.
    pub errors: Vec<String>,
}

/// Runs every included cell for every replication, in parallel.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutcome> {
    let plan = plan(config)?;
    for cell in &plan.skipped {
        info!("skipping excluded cell {}", cell.label());
    }
    let inputs = load_inputs(config)?;
    let scenarios = (0..config.replications)
        .map(|k| scenario(&inputs, config, k))
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(usize, usize)> = (0..plan.cells.len())
        .flat_map(|c| (0..scenarios.len()).map(move |r| (c, r)))
        .collect();
    let results: Vec<(usize, usize, std::result::Result<RunResult, String>)> = tasks
        .par_iter()
        .map(|&(c, r)| {
            let cell = &plan.cells[c];
            let outcome = catch_unwind(AssertUnwindSafe(|| run_cell(&inputs, &scenarios[r], cell, config)));
            let res = match outcome {
                Ok(Ok(run)) => Ok(run),
                Ok(Err(e)) => Err(format!("{} replication {r}: {e}", cell.label())),
                Err(panic) => {
                    let msg = panic
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_default();
                    Err(format!("{} replication {r} panicked: {msg}", cell.label()))
                }
            };
            (c, r, res)
        })
        .collect();
    let mut out = SweepOutcome {
        skipped: plan.skipped.clone(),
        ..SweepOutcome::default()
    };
    for (c, r, res) in results {
        match res {
            Ok(result) => out.runs.push(CellRun {
                cell: plan.cells[c].clone(),
                replication: scenarios[r].replication,
                seed: scenarios[r].seed,
                result,
            }),
            Err(e) => out.errors.push(e),
        }
    }
    Ok(out)
}
