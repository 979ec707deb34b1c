use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::sweep::{Cell, CellRun, SweepOutcome};
use crate::error::{Error, Result};
use crate::metrics::{t_interval, Interval, RunMetrics};
use crate::money::Micros;

pub const RUNS_CSV: &str = "runs.csv";
pub const RUNS_JSONL: &str = "runs.jsonl";
pub const SUMMARY_CSV: &str = "summary.csv";

const RUN_HEADER: [&str; 11] = [
    "strategy",
    "alpha",
    "mechanism",
    "replication",
    "seed",
    "total_cost",
    "violations",
    "useful_jobs",
    "dollars_per_useful",
    "failures",
    "vm_hours",
];

/// One line of `runs.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub strategy: String,
    pub alpha: f64,
    pub mechanism: String,
    pub replication: u32,
    pub seed: u64,
    pub total_cost: Micros,
    pub violations: u64,
    pub useful_jobs: u64,
    pub dollars_per_useful: Option<f64>,
    pub failures: u64,
    pub vm_hours: u64,
}

impl RunRow {
    pub fn from_run(run: &CellRun) -> Self {
        let m = &run.result.metrics;
        RunRow {
            strategy: run.cell.strategy.clone(),
            alpha: run.cell.alpha,
            mechanism: run.cell.mechanism.clone(),
            replication: run.replication,
            seed: run.seed,
            total_cost: m.total_cost,
            violations: m.deadline_violations,
            useful_jobs: m.jobs_within_deadline,
            dollars_per_useful: m.dollars_per_useful_computation,
            failures: m.failures_out_of_bid,
            vm_hours: m.vm_hours_charged,
        }
    }

    pub fn cell(&self) -> Cell {
        Cell {
            strategy: self.strategy.clone(),
            alpha: self.alpha,
            mechanism: self.mechanism.clone(),
        }
    }

    fn record(&self) -> [String; 11] {
        [
            self.strategy.clone(),
            self.alpha.to_string(),
            self.mechanism.clone(),
            self.replication.to_string(),
            self.seed.to_string(),
            self.total_cost.to_string(),
            self.violations.to_string(),
            self.useful_jobs.to_string(),
            self.dollars_per_useful.map_or_else(String::new, |v| v.to_string()),
            self.failures.to_string(),
            self.vm_hours.to_string(),
        ]
    }
}

pub fn write_runs_csv<W: Write>(rows: &[RunRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(RUN_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_runs_csv<R: Read>(source: R) -> Result<Vec<RunRow>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = r.headers()?.clone();
    if headers.iter().ne(RUN_HEADER) {
        return Err(Error::parse(1, format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let mut rows = vec![];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |k: usize| rec.get(k).unwrap_or_default();
        let num = |k: usize| -> Result<u64> {
            field(k)
                .parse()
                .map_err(|_| Error::parse(line, format!("{} is not an integer: {:?}", RUN_HEADER[k], field(k))))
        };
        rows.push(RunRow {
            strategy: field(0).to_string(),
            alpha: field(1)
                .parse()
                .map_err(|_| Error::parse(line, format!("bad alpha {:?}", field(1))))?,
            mechanism: field(2).to_string(),
            replication: num(3)? as u32,
            seed: num(4)?,
            total_cost: field(5)
                .parse()
                .map_err(|e| Error::parse(line, format!("bad total_cost: {e}")))?,
            violations: num(6)?,
            useful_jobs: num(7)?,
            dollars_per_useful: match field(8) {
                "" => None,
                v => Some(v.parse().map_err(|_| Error::parse(line, format!("bad ratio {v:?}")))?),
            },
            failures: num(9)?,
            vm_hours: num(10)?,
        });
    }
    Ok(rows)
}

/// Per-cell statistics over its replications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: Cell,
    pub replications: usize,
    pub total_cost: Interval,
    pub violations: Interval,
    pub useful_jobs: Interval,
    pub dollars_per_useful: Interval,
    pub failures: Interval,
    pub vm_hours: Interval,
}

/// Groups rows by cell in first-appearance order.
pub fn summarize(rows: &[RunRow]) -> Vec<CellSummary> {
    let mut cells: Vec<Cell> = vec![];
    for row in rows {
        let cell = row.cell();
        if !cells.contains(&cell) {
            cells.push(cell);
        }
    }
    cells
        .into_iter()
        .map(|cell| {
            let of: Vec<&RunRow> = rows.iter().filter(|r| r.cell() == cell).collect();
            let col = |f: fn(&RunRow) -> f64| t_interval(&of.iter().map(|r| f(r)).collect::<Vec<_>>());
            let ratios: Vec<f64> = of.iter().filter_map(|r| r.dollars_per_useful).collect();
            CellSummary {
                replications: of.len(),
                total_cost: col(|r| r.total_cost.dollars()),
                violations: col(|r| r.violations as f64),
                useful_jobs: col(|r| r.useful_jobs as f64),
                dollars_per_useful: t_interval(&ratios),
                failures: col(|r| r.failures as f64),
                vm_hours: col(|r| r.vm_hours as f64),
                cell,
            }
        })
        .collect()
}

fn interval_fields(i: &Interval) -> [String; 3] {
    let f = |v: f64| if v.is_finite() { v.to_string() } else { String::new() };
    [f(i.mean), f(i.sd), i.half_width.map_or_else(String::new, f)]
}

pub fn write_summary_csv<W: Write>(summaries: &[CellSummary], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["strategy".to_string(), "alpha".into(), "mechanism".into(), "replications".into()];
    for m in ["total_cost", "violations", "useful_jobs", "dollars_per_useful", "failures", "vm_hours"] {
        for s in ["mean", "sd", "ci95"] {
            header.push(format!("{m}_{s}"));
        }
    }
    w.write_record(&header)?;
    for s in summaries {
        let mut rec = vec![
            s.cell.strategy.clone(),
            s.cell.alpha.to_string(),
            s.cell.mechanism.clone(),
            s.replications.to_string(),
        ];
        for i in [&s.total_cost, &s.violations, &s.useful_jobs, &s.dollars_per_useful, &s.failures, &s.vm_hours] {
            rec.extend(interval_fields(i));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Serialize)]
struct RunLine<'a> {
    #[serde(flatten)]
    cell: &'a Cell,
    replication: u32,
    seed: u64,
    start: u64,
    #[serde(flatten)]
    metrics: &'a RunMetrics,
    failures_logged: usize,
    config: &'a ExperimentConfig,
}

/// Writes `runs.csv`, `runs.jsonl` and `summary.csv` into `dir`.
pub fn write_reports(outcome: &SweepOutcome, config: &ExperimentConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let rows: Vec<RunRow> = outcome.runs.iter().map(RunRow::from_run).collect();
    let create = |name: &str| -> Result<BufWriter<File>> {
        let path = dir.join(name);
        Ok(BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?))
    };
    write_runs_csv(&rows, create(RUNS_CSV)?)?;
    let mut jsonl = create(RUNS_JSONL)?;
    for run in &outcome.runs {
        let line = RunLine {
            cell: &run.cell,
            replication: run.replication,
            seed: run.seed,
            start: run.result.start,
            metrics: &run.result.metrics,
            failures_logged: run.result.failures.len(),
            config,
        };
        serde_json::to_writer(&mut jsonl, &line)?;
        jsonl.write_all(b"\n").map_err(|e| Error::io(dir.join(RUNS_JSONL), e))?;
    }
    jsonl.flush().map_err(|e| Error::io(dir.join(RUNS_JSONL), e))?;
    write_summary_csv(&summarize(&rows), create(SUMMARY_CSV)?)?;
    Ok(())
}
