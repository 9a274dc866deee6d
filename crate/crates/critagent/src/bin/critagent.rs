//! Thin CLI over the library: generate criteria for a dataset, score them,
//! derive the report tables, and inspect the response cache.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use critagent::error::Error;
use critagent::model::Source;
use critagent::run::{
    cache_stats, run_generate, run_metrics, run_report, ConfigOverrides, GenerateOptions,
    MetricKind, MetricsOptions, ReportOptions, RunConfig,
};

#[derive(Parser)]
#[command(name = "critagent", version, about = "Mine expert web guidance into ranked writing-task criteria")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// TOML config file; flags and environment override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    temperature: Option<f64>,
    /// Maximum concurrent provider calls.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Recorded fixture bundle; replaces all live providers.
    #[arg(long, global = true)]
    mock_fixtures: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate criteria for every instruction in a dataset.
    Generate {
        /// Instructions file (JSONL, one record per line).
        #[arg(long)]
        dataset: PathBuf,
        /// ea-web, ea-full, id, llm, or llm-n.
        #[arg(long)]
        method: String,
        /// Output directory for criteria, intermediates, and the manifest.
        #[arg(long)]
        out: PathBuf,
        /// Checklist size; required for llm-n and ea-full.
        #[arg(long)]
        n: Option<usize>,
        /// Also rank baseline criteria by relevance.
        #[arg(long)]
        rank: bool,
        /// Keep only instructions mentioning a writing keyword.
        #[arg(long)]
        filter_keywords: bool,
        /// Process at most this many instructions.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Score a criteria file with one metric.
    Metrics {
        /// specificity, implicitness, actionability, or recall.
        #[arg(long)]
        which: String,
        #[arg(long)]
        criteria: PathBuf,
        #[arg(long)]
        instructions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Recall cutoffs; may repeat.
        #[arg(long = "k")]
        k: Vec<usize>,
        /// Criteria file providing the specificity token pool.
        #[arg(long)]
        pool: Option<PathBuf>,
        /// Use the scored file itself as the specificity pool.
        #[arg(long)]
        self_pool: bool,
    },
    /// Join criteria files with metric files into the two CSV tables.
    Report {
        /// Criteria files; may repeat.
        #[arg(long, required = true)]
        criteria: Vec<PathBuf>,
        #[arg(long)]
        instructions: PathBuf,
        /// Directory holding the metric files; receives the CSVs.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print response-cache entry count and size.
    CacheStats,
}

fn effective_config(global: &GlobalArgs) -> critagent::Result<RunConfig> {
    let overrides = ConfigOverrides {
        model: global.model.clone(),
        temperature: global.temperature,
        parallelism: global.parallelism,
        cache_dir: global.cache_dir.clone(),
        mock_fixtures: global.mock_fixtures.clone(),
    };
    RunConfig::resolve(global.config.as_deref(), &overrides)
}

fn execute(cli: Cli) -> critagent::Result<()> {
    let config = effective_config(&cli.global)?;
    match cli.command {
        Command::Generate { dataset, method, out, n, rank, filter_keywords, limit } => {
            let method = Source::from_slug(&method).ok_or_else(|| {
                Error::Config(format!(
                    "unknown method '{method}' (expected ea-web, ea-full, id, llm, or llm-n)"
                ))
            })?;
            let summary = run_generate(
                &config,
                &GenerateOptions {
                    dataset,
                    method,
                    out_dir: out,
                    n,
                    rank_baselines: rank,
                    filter_keywords,
                    limit,
                },
            )?;
            for warning in &summary.warnings {
                log::warn!("{warning}");
            }
            println!("run {}", summary.run_id);
            println!(
                "completed {} instruction(s), skipped {} already done, {} failed",
                summary.completed.len(),
                summary.skipped_existing.len(),
                summary.failed.len()
            );
            for failure in &summary.failed {
                println!("  failed {}: {}", failure.id, failure.reason);
            }
            println!("criteria: {}", summary.criteria_path.display());
            Ok(())
        }
        Command::Metrics { which, criteria, instructions, out, k, pool, self_pool } => {
            let which = MetricKind::parse(&which)?;
            let k = if k.is_empty() { vec![5] } else { k };
            let summary = run_metrics(
                &config,
                &MetricsOptions { which, criteria, instructions, out_dir: out, k, pool, self_pool },
            )?;
            for warning in &summary.warnings {
                log::warn!("{warning}");
            }
            println!("{}: {} record(s)", summary.which.slug(), summary.records);
            if let Some(mean) = summary.mean {
                println!("mean: {mean:.4}");
            }
            for path in &summary.out_paths {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Report { criteria, instructions, out } => {
            let summary = run_report(&ReportOptions { criteria, instructions, out_dir: out })?;
            for warning in &summary.warnings {
                log::warn!("{warning}");
            }
            println!("{} criterion row(s) -> {}", summary.criteria_rows, summary.criteria_csv.display());
            println!("{} aggregate row(s) -> {}", summary.aggregate_rows, summary.aggregate_csv.display());
            Ok(())
        }
        Command::CacheStats => {
            let stats = cache_stats(&config)?;
            println!("cache {}: {} entrie(s), {} bytes", config.cache_dir.display(), stats.entries, stats.bytes);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
