//! Command-line experiment runner.
//!
//! Each subcommand runs one experiment family from a JSON document and
//! writes a report bundle. Exit codes: 0 all verdicts pass, 1 a verdict
//! failed (or the run hit a model-level validity error), 2 the document is
//! invalid, 3 the resource budget was exceeded.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stochgeo::harness::{
    emit_report, parse_config, run, validate_config, EmitFormat, ExperimentConfig, ModelConfig,
    Severity,
};
use stochgeo::Error;

#[derive(Parser)]
#[command(name = "stochgeo", version, about = "Monte Carlo lab for spatial functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster counts of site percolation on a ladder of lattice boxes
    PercClusters(RunArgs),
    /// Largest-cluster order of site percolation on a cube-like ladder
    PercLargest(RunArgs),
    /// Geometric-graph functionals (subgraph counts, components, independence)
    Rgg(RunArgs),
    /// Covered volume of the union of random balls
    GermGrain(RunArgs),
    /// Accepted-particle counts of sequential deposition
    Rsa(RunArgs),
    /// Power-weighted nearest-neighbour sums
    Knn(RunArgs),
    /// Exact sum-decomposition harness (no sampling)
    Decomp(RunArgs),
    /// Validate a document without running it
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment document
    #[arg(long)]
    config: PathBuf,
    /// Override the document's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Report format
    #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
    format: String,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::ResourceCap { .. } => ExitCode::from(3),
                Error::SupercriticalComponent { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Validate(args) => {
            let text = std::fs::read_to_string(&args.config)?;
            let config = parse_config(&text)?;
            match validate_config(&config) {
                Ok(spec) => {
                    println!("document is valid: {} ladder sizes", spec.sizes.len());
                    for note in &spec.notes {
                        let tag = match note.severity {
                            Severity::Warning => "warning",
                            Severity::OutsideProvedRegime => "outside-proved-regime",
                            Severity::Error => "error",
                        };
                        println!("  [{tag}] {}: {}", note.hypothesis, note.message);
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(violations) => {
                    for v in &violations {
                        eprintln!("  [{:?}] {}: {}", v.severity, v.hypothesis, v.message);
                    }
                    Ok(ExitCode::from(2))
                }
            }
        }
        Command::PercClusters(args) => run_model(args, |m| {
            matches!(m, ModelConfig::PercolationClusters { .. })
        }),
        Command::PercLargest(args) => run_model(args, |m| {
            matches!(m, ModelConfig::PercolationLargest { .. })
        }),
        Command::Rgg(args) => run_model(args, |m| {
            matches!(
                m,
                ModelConfig::RggSubgraph { .. }
                    | ModelConfig::RggComponents { .. }
                    | ModelConfig::RggIndependence { .. }
            )
        }),
        Command::GermGrain(args) => {
            run_model(args, |m| matches!(m, ModelConfig::GermGrainVolume { .. }))
        }
        Command::Rsa(args) => run_model(args, |m| matches!(m, ModelConfig::Rsa { .. })),
        Command::Knn(args) => run_model(args, |m| matches!(m, ModelConfig::KnnSum { .. })),
        Command::Decomp(args) => {
            run_model(args, |m| matches!(m, ModelConfig::Decomposition { .. }))
        }
    }
}

fn run_model(args: RunArgs, accepts: fn(&ModelConfig) -> bool) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut config: ExperimentConfig = parse_config(&text)?;
    if !accepts(&config.model) {
        return Err(Error::Configuration(
            "experiment model does not match this subcommand".into(),
        ));
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    let threads = args
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let format = if args.format == "csv" {
        EmitFormat::CsvBundle
    } else {
        EmitFormat::Json
    };

    let (report, timing) = run(&config, threads)?;
    let files = emit_report(&report, &timing, &args.out, format)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    for v in &report.verdicts {
        let status = match v.status {
            stochgeo::harness::VerdictStatus::Pass => "pass",
            stochgeo::harness::VerdictStatus::Fail => "FAIL",
            stochgeo::harness::VerdictStatus::OutsideProvedRegime => "outside-proved-regime",
        };
        println!("[{status}] {}: {}", v.criterion, v.detail);
    }
    if report.any_failure() {
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}
