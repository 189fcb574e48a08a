mod commands;
mod config;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::PredictSettings;
use config::{parse_label_map, resolve_common, CommonArgs, Resolver};

/// Batch three-class text classifier: n-gram features, a linear SVM and a
/// deterministic cross-validation harness.
#[derive(Parser)]
#[command(name = "lexiclass", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-validate feature sets and write reports.
    Evaluate(EvaluateArgs),
    /// Cross-validate several systems and score their oracle combination.
    Oracle(OracleArgs),
    /// Measure accuracy as a function of training set size.
    Curve(CurveArgs),
    /// Train on the whole corpus and write model + vocabulary.
    Train(TrainArgs),
    /// Label a CSV of texts with a trained model.
    Predict(PredictArgs),
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated training fractions in (0, 1]
    /// [default: 0.1,0.2,...,1.0].
    #[arg(long)]
    fractions: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also write the N highest-weight features per class [default: 0].
    #[arg(long)]
    top_features: Option<usize>,
}

#[derive(Args)]
struct PredictArgs {
    /// Config file with `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// model.json written by `train`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// vocab.json written by `train`.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Input CSV file with a header row.
    #[arg(long)]
    data: Option<PathBuf>,
    /// CSV column holding the text [default: tweet].
    #[arg(long)]
    text_col: Option<String>,
    /// CSV column holding gold labels, if present [default: class].
    #[arg(long)]
    label_col: Option<String>,
    /// Raw label values mapped to classes [default: 0=HATE,1=OFFENSIVE,2=OK].
    #[arg(long)]
    label_map: Option<String>,
    /// Output directory; created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 means one per core [default: 0].
    #[arg(long)]
    jobs: Option<usize>,
}

fn init_jobs(jobs: usize) -> Result<()> {
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    Ok(())
}

fn parse_fractions(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid fraction {part:?}"))
        })
        .collect()
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Evaluate(args) => {
            let settings = resolve_common(&args.common, "all")?;
            init_jobs(settings.jobs)?;
            commands::cmd_evaluate(&settings)
        }
        Command::Oracle(args) => {
            let settings = resolve_common(&args.common, "suite")?;
            init_jobs(settings.jobs)?;
            commands::cmd_oracle(&settings)
        }
        Command::Curve(args) => {
            let settings = resolve_common(&args.common, "all")?;
            init_jobs(settings.jobs)?;
            let resolver = Resolver::new(args.common.config.as_deref())?;
            let fractions = resolver.get(
                args.fractions.clone(),
                "fractions",
                "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0".to_string(),
            )?;
            commands::cmd_curve(&settings, &parse_fractions(&fractions)?)
        }
        Command::Train(args) => {
            let settings = resolve_common(&args.common, "all")?;
            init_jobs(settings.jobs)?;
            let resolver = Resolver::new(args.common.config.as_deref())?;
            let top_n = resolver.get(args.top_features, "top-features", 0)?;
            commands::cmd_train(&settings, top_n)
        }
        Command::Predict(args) => {
            let resolver = Resolver::new(args.config.as_deref())?;
            let jobs = resolver.get(args.jobs, "jobs", 0)?;
            init_jobs(jobs)?;
            let label_map = resolver.get(
                args.label_map.clone(),
                "label-map",
                "0=HATE,1=OFFENSIVE,2=OK".to_string(),
            )?;
            let settings = PredictSettings {
                model: resolver.required(args.model.clone(), "model")?,
                vocab: resolver.required(args.vocab.clone(), "vocab")?,
                data: resolver.required(args.data.clone(), "data")?,
                text_col: resolver.get(args.text_col.clone(), "text-col", "tweet".to_string())?,
                label_col: resolver.get(args.label_col.clone(), "label-col", "class".to_string())?,
                label_map: parse_label_map(&label_map)?,
                out: resolver.required(args.out.clone(), "out")?,
            };
            commands::cmd_predict(&settings)
        }
    }
}

fn main() {
    if let Err(error) = run() {
        eprintln!("error: {error:#}");
        std::process::exit(1);
    }
}
