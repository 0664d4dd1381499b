use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;
use fairtopk::ingest::{ingest_csv, DerivedColumn, IngestionSpec};
use fairtopk_server::{router, AppState, Loaded};

/// Serves audit and repair for one CSV dataset.
#[derive(Parser, Debug)]
#[command(name = "fairtopk-server", version)]
struct Args {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    score_cols: Vec<String>,
    #[arg(long)]
    group_col: String,
    #[arg(long)]
    protected: String,
    #[arg(long = "derived")]
    derived: Vec<String>,
    #[arg(long, default_value_t = 6)]
    snap: u32,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let mut spec = IngestionSpec::new(&args.data, args.score_cols, args.group_col, args.protected);
    spec.derived_columns = args.derived.iter().map(|d| DerivedColumn::parse(d)).collect::<fairtopk::Result<_>>()?;
    spec.snap_places = args.snap;
    let ingested = ingest_csv(&spec).with_context(|| format!("reading {}", args.data.display()))?;
    for w in &ingested.report.warnings {
        log::warn!("{w}");
    }
    log::info!("loaded {} candidates ({} rows dropped)", ingested.dataset.n(), ingested.report.rows_dropped);
    let state = AppState::new(Some(Loaded { dataset: ingested.dataset, column_names: ingested.report.column_names }));
    let listener = tokio::net::TcpListener::bind(args.bind).await?;
    log::info!("listening on {}", args.bind);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
