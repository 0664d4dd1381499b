use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fairtopk::app::{
    bounds_from_shares, eps_from_f64, run_audit, run_bench, run_repair, synthetic_dataset, Algorithm, BenchConfig,
    RepairOptions, Report,
};
use fairtopk::ingest::{ingest_csv, DerivedColumn, IngestionSpec};
use fairtopk::milp::{to_lp_string, MilpModel};
use fairtopk::model::{Dataset, FairnessSpec, WeightBox, WeightVector};
use fairtopk::Control;

/// Audit and repair linear top-k rankings for group fairness.
#[derive(Parser, Debug)]
#[command(name = "fairtopk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check whether one weight vector gives a fair top-k.
    Audit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        bounds: BoundArgs,
        /// Weight vector to audit, comma separated.
        #[arg(long, visible_alias = "w")]
        w0: String,
        /// JSON report destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search the eps-box around w0 for a fair weight vector.
    Repair {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        bounds: BoundArgs,
        #[arg(long)]
        w0: String,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value = "sweep2d")]
        algorithm: Algorithm,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Expansion budget (klevel-hd) or node budget (milp).
        #[arg(long)]
        budget: Option<u64>,
        /// Seconds before the search gives up.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Keep candidates outside the k-skyband.
        #[arg(long)]
        no_skyband: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time repairs over a fixed set of sampled unfair weight vectors.
    Bench {
        #[command(flatten)]
        data: OptionalDataArgs,
        #[arg(long, value_delimiter = ',', default_value = "50")]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.05")]
        eps: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "sweep2d")]
        algorithm: Vec<Algorithm>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        workers: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 0.4)]
        lower_share: f64,
        #[arg(long, default_value_t = 0.6)]
        upper_share: f64,
        #[arg(long, default_value_t = 10.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        no_skyband: bool,
        /// Metrics JSON destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the feasibility MILP for an eps-box in LP format.
    ExportMilp {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        bounds: BoundArgs,
        #[arg(long)]
        w0: String,
        #[arg(long)]
        eps: f64,
        /// LP file destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Args, Debug)]
struct OptionalDataArgs {
    /// CSV file; a synthetic dataset is generated when absent.
    #[arg(long, requires = "score_cols")]
    data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    score_cols: Vec<String>,
    #[arg(long, default_value = "group")]
    group_col: String,
    #[arg(long, default_value = "G1")]
    protected: String,
    #[arg(long = "derived")]
    derived: Vec<String>,
    #[arg(long, default_value_t = 6)]
    snap: u32,
    #[arg(long, default_value = ",")]
    delimiter: char,
    /// Synthetic dataset size.
    #[arg(long, default_value_t = 100_000)]
    synthetic_n: usize,
    /// Synthetic dataset dimension.
    #[arg(long, default_value_t = 2)]
    synthetic_d: usize,
}

#[derive(Args, Debug)]
struct ColumnArgs {
    /// Score columns in weight order, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    score_cols: Vec<String>,
    #[arg(long)]
    group_col: String,
    /// Value of the group column marking the protected group.
    #[arg(long)]
    protected: String,
    /// Extra column `name=expr`; usable in --score-cols. Repeatable.
    #[arg(long = "derived")]
    derived: Vec<String>,
    /// Decimal places of the score grid.
    #[arg(long, default_value_t = 6)]
    snap: u32,
    #[arg(long, default_value = ",")]
    delimiter: char,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[arg(long)]
    k: usize,
    /// Minimum protected members in the top-k.
    #[arg(long, conflicts_with = "lower_share")]
    lower: Option<usize>,
    /// Maximum protected members in the top-k.
    #[arg(long, conflicts_with = "upper_share")]
    upper: Option<usize>,
    #[arg(long)]
    lower_share: Option<f64>,
    #[arg(long)]
    upper_share: Option<f64>,
}

impl BoundArgs {
    fn spec(&self) -> Result<FairnessSpec> {
        let lower = match (self.lower, self.lower_share) {
            (Some(l), _) => l,
            (None, Some(s)) => bounds_from_shares(self.k, s, 1.0)?.lower,
            (None, None) => 0,
        };
        let upper = match (self.upper, self.upper_share) {
            (Some(u), _) => u,
            (None, Some(s)) => bounds_from_shares(self.k, 0.0, s)?.upper,
            (None, None) => self.k,
        };
        Ok(FairnessSpec::new(self.k, lower, upper)?)
    }
}

fn delimiter_byte(c: char) -> Result<u8> {
    if !c.is_ascii() {
        bail!("delimiter must be a single ASCII character");
    }
    Ok(c as u8)
}

fn load(
    path: &PathBuf,
    score_cols: &[String],
    group_col: &str,
    protected: &str,
    derived: &[String],
    snap: u32,
    delimiter: char,
) -> Result<Dataset> {
    let mut spec = IngestionSpec::new(path, score_cols.to_vec(), group_col, protected);
    spec.derived_columns = derived.iter().map(|d| DerivedColumn::parse(d)).collect::<fairtopk::Result<_>>()?;
    spec.snap_places = snap;
    spec.delimiter = delimiter_byte(delimiter)?;
    let ingested = ingest_csv(&spec).with_context(|| format!("reading {}", path.display()))?;
    let r = &ingested.report;
    eprintln!(
        "loaded {} of {} rows ({} dropped), {} protected ({:.1}%)",
        ingested.dataset.n(),
        r.rows_read,
        r.rows_dropped,
        ingested.dataset.candidates().iter().filter(|c| c.is_protected()).count(),
        100.0 * ingested.dataset.protected_share()
    );
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    Ok(ingested.dataset)
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let c = &self.columns;
        load(&self.data, &c.score_cols, &c.group_col, &c.protected, &c.derived, c.snap, c.delimiter)
    }
}

impl OptionalDataArgs {
    fn load(&self, seed: u64) -> Result<Dataset> {
        match &self.data {
            Some(path) => load(path, &self.score_cols, &self.group_col, &self.protected, &self.derived, self.snap, self.delimiter),
            None => Ok(synthetic_dataset(seed, self.synthetic_n, self.synthetic_d, 0.5, 0.3)?),
        }
    }
}

fn emit(report: &Report, out: Option<&PathBuf>) -> Result<()> {
    print!("{}", report.to_text());
    if let Some(path) = out {
        std::fs::write(path, serde_json::to_string_pretty(report)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Audit { data, bounds, w0, out } => {
            let ds = data.load()?;
            let report = run_audit(&ds, &WeightVector::parse(&w0)?, &bounds.spec()?)?;
            emit(&report, out.as_ref())
        }
        Command::Repair { data, bounds, w0, eps, algorithm, workers, seed, budget, time_limit, no_skyband, out } => {
            let ds = data.load()?;
            let time_limit = match time_limit {
                Some(s) if !(s > 0.0) => bail!("--time-limit must be positive"),
                Some(s) => Some(Duration::from_secs_f64(s)),
                None => None,
            };
            let opts = RepairOptions { algorithm, workers, seed, budget, time_limit, skyband: !no_skyband };
            let report = run_repair(&ds, &WeightVector::parse(&w0)?, &eps_from_f64(eps)?, &bounds.spec()?, &opts, &Control::new())?;
            emit(&report, out.as_ref())
        }
        Command::Bench {
            data,
            k,
            eps,
            algorithm,
            workers,
            samples,
            lower_share,
            upper_share,
            time_limit,
            seed,
            budget,
            no_skyband,
            out,
        } => {
            let ds = data.load(seed)?;
            let cfg = BenchConfig {
                ks: k,
                eps,
                algorithms: algorithm,
                workers,
                samples,
                lower_share,
                upper_share,
                time_limit_secs: time_limit,
                seed,
                budget,
                skyband: !no_skyband,
            };
            let metrics = run_bench(&ds, &cfg, &Control::new())?;
            println!("n={} d={}", metrics.n, metrics.d);
            println!("{:<10} {:>6} {:>8} {:>7} {:>5} {:>8} {:>12} {:>10} {:>8} {:>8}", "algorithm", "k", "eps", "workers", "runs", "timeouts", "mean ms", "events", "lps", "nodes");
            for r in &metrics.rows {
                println!(
                    "{:<10} {:>6} {:>8} {:>7} {:>5} {:>8} {:>12.3} {:>10.1} {:>8.1} {:>8.1}",
                    r.algorithm.name(),
                    r.k,
                    r.eps,
                    r.workers,
                    r.runs,
                    r.timeouts,
                    r.mean_wall_millis,
                    r.mean_events,
                    r.mean_lps,
                    r.mean_nodes
                );
            }
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string_pretty(&metrics)?).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        Command::ExportMilp { data, bounds, w0, eps, out } => {
            let ds = data.load()?;
            let region = WeightBox::from_epsilon_box(&WeightVector::parse(&w0)?, &eps_from_f64(eps)?)?;
            let spec = bounds.spec()?;
            spec.validate_for(&ds)?;
            let text = to_lp_string(&MilpModel::build(&ds, &spec, &region)?)?;
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
