use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use spotsim::experiment::{
    rank_cells, read_runs_csv, run_sweep, summarize, synthetic_book, synthetic_workload, write_reports,
    ExperimentConfig, RUNS_CSV,
};
use spotsim::market::synthetic::SyntheticPriceParams;
use spotsim::market::trace::write_price_traces;
use spotsim::workload::write_swf;

/// Trace-driven simulator of deadline-constrained jobs on spot instances.
#[derive(Parser, Debug)]
#[command(name = "spotsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a factor sweep and write runs.csv, runs.jsonl and summary.csv.
    Run(RunArgs),
    /// Rank the cells of a finished sweep by dollars per useful job.
    Rank {
        /// Directory holding a sweep's runs.csv.
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        /// Show only the first N cells.
        #[arg(long)]
        top: Option<usize>,
    },
    /// Write a synthetic price trace as CSV.
    GenPrices {
        #[arg(long, default_value_t = 2011)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        days: u32,
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
        /// Use the volatile parameter preset.
        #[arg(long)]
        volatile: bool,
        /// Take generator parameters, types and datacenters from a config file.
        #[arg(long, value_name = "TOML")]
        config: Option<PathBuf>,
    },
    /// Write a synthetic workload in Standard Workload Format.
    GenWorkload {
        #[arg(long, default_value_t = 2011)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        days: Option<f64>,
        #[arg(long, value_name = "SWF")]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML config; flags override its values.
    #[arg(long, value_name = "TOML")]
    config: Option<PathBuf>,
    /// SWF file or `synthetic`.
    #[arg(long, value_name = "SWF")]
    workload: Option<String>,
    /// Price CSV or `synthetic`.
    #[arg(long, value_name = "CSV")]
    prices: Option<String>,
    #[arg(long = "strategy", value_name = "NAME", num_args = 1.., value_delimiter = ',')]
    strategies: Vec<String>,
    #[arg(long = "alpha", value_name = "N", num_args = 1.., value_delimiter = ',')]
    alphas: Vec<f64>,
    #[arg(long = "mechanism", value_name = "NAME", num_args = 1.., value_delimiter = ',')]
    mechanisms: Vec<String>,
    #[arg(long)]
    replications: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs_limit: Option<usize>,
    #[arg(long)]
    horizon_days: Option<f64>,
    /// Exclude a `strategy:mechanism` pair; repeatable.
    #[arg(long = "exclude", value_name = "S:M")]
    exclude: Vec<String>,
    /// Run every cell, including the default exclusions.
    #[arg(long)]
    no_exclusions: bool,
    /// Use the volatile preset for synthetic prices.
    #[arg(long)]
    volatile_prices: bool,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => Ok(ExperimentConfig::load(p)?),
        None => Ok(ExperimentConfig::default()),
    }
}

fn effective_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut c = load_config(args.config.as_deref())?;
    if args.volatile_prices {
        let days = c.synthetic_prices.days;
        c.synthetic_prices = SyntheticPriceParams { days, ..SyntheticPriceParams::volatile() };
    }
    if let Some(w) = &args.workload {
        c.workload.clone_from(w);
    }
    if let Some(p) = &args.prices {
        c.prices.clone_from(p);
    }
    if !args.strategies.is_empty() {
        c.strategies.clone_from(&args.strategies);
    }
    if !args.alphas.is_empty() {
        c.alphas.clone_from(&args.alphas);
    }
    if !args.mechanisms.is_empty() {
        c.mechanisms.clone_from(&args.mechanisms);
    }
    if let Some(r) = args.replications {
        c.replications = r;
    }
    if let Some(s) = args.seed {
        c.base_seed = s;
    }
    if let Some(n) = args.jobs_limit {
        c.jobs_limit = Some(n);
    }
    if let Some(d) = args.horizon_days {
        c.horizon_days = d;
    }
    if args.no_exclusions {
        c.exclusions.clear();
    }
    c.exclusions.extend(args.exclude.iter().cloned());
    c.validate()?;
    Ok(c)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let config = effective_config(&args)?;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    fs::write(args.out.join("config.toml"), config.to_toml_string()?)
        .with_context(|| format!("writing config echo into {}", args.out.display()))?;

    let outcome = run_sweep(&config)?;
    write_reports(&outcome, &config, &args.out)?;
    if outcome.runs.is_empty() && outcome.errors.is_empty() {
        warn!("every cell of the grid is excluded; nothing was run");
    }
    info!(
        "{} runs written to {} ({} cells skipped)",
        outcome.runs.len(),
        args.out.display(),
        outcome.skipped.len()
    );
    if outcome.errors.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    for e in &outcome.errors {
        eprintln!("error: {e}");
    }
    eprintln!(
        "{} of {} runs failed; the completed runs were written",
        outcome.errors.len(),
        outcome.errors.len() + outcome.runs.len()
    );
    Ok(ExitCode::from(2))
}

fn rank(input: &Path, top: Option<usize>) -> Result<()> {
    let path = input.join(RUNS_CSV);
    let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    let rows = read_runs_csv(BufReader::new(file))?;
    if rows.is_empty() {
        bail!("{} has no runs", path.display());
    }
    let ranked = rank_cells(&summarize(&rows));
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "{:>4}  {:<34} {:>12} {:>10} {:>10}", "rank", "cell", "usd/useful", "ci95", "worse %")?;
    for r in ranked.iter().take(top.unwrap_or(usize::MAX)) {
        let hw = r.half_width.map_or_else(|| "-".to_string(), |h| format!("{h:.5}"));
        writeln!(
            out,
            "{:>4}  {:<34} {:>12.5} {:>10} {:>10.2}",
            r.rank,
            r.cell.label(),
            r.mean,
            hw,
            r.worsening_pct
        )?;
    }
    let unranked = summarize(&rows).len() - ranked.len();
    if unranked > 0 {
        warn!("{unranked} cells had no job finish within its deadline and are not ranked");
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn gen_prices(seed: u64, days: u32, out: &Path, volatile: bool, config: Option<&Path>) -> Result<()> {
    let mut c = load_config(config)?;
    c.base_seed = seed;
    if volatile {
        c.synthetic_prices = SyntheticPriceParams::volatile();
    }
    c.synthetic_prices.days = days;
    let book = synthetic_book(&c)?;
    let mut sink = create(out)?;
    write_price_traces(&book, &mut sink)?;
    sink.flush()?;
    Ok(())
}

fn gen_workload(seed: u64, jobs: Option<usize>, days: Option<f64>, out: &Path) -> Result<()> {
    let mut c = ExperimentConfig::default();
    c.base_seed = seed;
    if let Some(n) = jobs {
        c.synthetic_workload.jobs = n;
    }
    if let Some(d) = days {
        c.synthetic_workload.days = d;
    }
    let records = synthetic_workload(&c)?;
    let mut sink = create(out)?;
    write_swf(&records, &format!("synthetic workload, seed {seed}"), &mut sink)?;
    sink.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPOTSIM_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Rank { input, top } => rank(&input, top).map(|()| ExitCode::SUCCESS),
        Command::GenPrices { seed, days, out, volatile, config } => {
            gen_prices(seed, days, &out, volatile, config.as_deref()).map(|()| ExitCode::SUCCESS)
        }
        Command::GenWorkload { seed, jobs, days, out } => gen_workload(seed, jobs, days, &out).map(|()| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
