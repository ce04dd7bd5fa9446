//! `quantsel`: simulate, fit, select and evaluate quantile-specific subsets.
//!
//! Exit status is 0 on success, 2 for usage or input errors and 3 for
//! numerical failures.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::EvaluateInputs;
use config::{AnalysisArgs, CommonArgs, ResponseArg, RunConfig, SamplerArgs, SimArgs};
use error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "quantsel", version, about = "Bayesian quantile subset selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write simulated train/test data and ground truth per repetition.
    Simulate(SimulateArgs),
    /// Draw from the location-scale posterior for a training CSV.
    Fit(FitArgs),
    /// Search, filter and summarize subsets at each quantile level.
    Select(SelectArgs),
    /// Score per-level reports against held-out data and the truth.
    Evaluate(EvaluateArgs),
    /// Mean and sd of metric files per (tau, method, metric).
    Aggregate(AggregateArgs),
    /// Simulate, fit, select and evaluate in one go.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[command(flatten)]
    response: ResponseArg,
    #[arg(long)]
    train: PathBuf,
    /// Repetition index; selects the sampler's random stream.
    #[arg(long, default_value_t = 0)]
    rep: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[command(flatten)]
    response: ResponseArg,
    #[arg(long)]
    train: PathBuf,
    /// Posterior draws CSV written by `fit`.
    #[arg(long)]
    posterior: PathBuf,
    /// Summarize this subset (1-based, comma-separated) instead of searching.
    #[arg(long)]
    subset: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    response: ResponseArg,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    posterior: PathBuf,
    /// Directory holding the per-level reports.
    #[arg(long)]
    reports: PathBuf,
    #[arg(long, default_value_t = 0)]
    rep: u64,
    /// Metrics CSV to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    /// Metric CSV files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => {
            let file = RunConfig::load(a.common.config.as_deref())?;
            let (cfg, reps) = config::sim_config(&a.sim, config::seed(&a.common, &file), &file)?;
            commands::with_jobs(config::jobs(&a.common, &file), || {
                commands::simulate(&cfg, reps, &a.out)
            })?
        }
        Command::Fit(a) => {
            let file = RunConfig::load(a.common.config.as_deref())?;
            let cfg = config::sampler_config(&a.sampler, &file)?;
            commands::fit(
                &a.train,
                &a.response.resolve(&file),
                &cfg,
                config::seed(&a.common, &file),
                a.rep,
                &a.out,
            )
        }
        Command::Select(a) => {
            let file = RunConfig::load(a.common.config.as_deref())?;
            let cfg = config::analysis_config(&a.analysis, &file)?;
            let response = a.response.resolve(&file);
            commands::with_jobs(config::jobs(&a.common, &file), || {
                commands::select(
                    &a.train,
                    &a.posterior,
                    &response,
                    &cfg,
                    a.subset.as_deref(),
                    &a.out,
                )
            })?
        }
        Command::Evaluate(a) => {
            let file = RunConfig::load(a.config.as_deref())?;
            let inputs = EvaluateInputs {
                train: &a.train,
                test: &a.test,
                truth: &a.truth,
                draws: &a.posterior,
                reports: &a.reports,
            };
            commands::evaluate_files(&inputs, &a.response.resolve(&file), a.rep, &a.out)
        }
        Command::Aggregate(a) => commands::aggregate_files(&a.inputs, &a.out),
        Command::Pipeline(a) => {
            let file = RunConfig::load(a.common.config.as_deref())?;
            let (sim, reps) = config::sim_config(&a.sim, config::seed(&a.common, &file), &file)?;
            let sampler = config::sampler_config(&a.sampler, &file)?;
            let analysis = config::analysis_config(&a.analysis, &file)?;
            commands::with_jobs(config::jobs(&a.common, &file), || {
                commands::pipeline(&sim, reps, &sampler, &analysis, &a.out)
            })?
        }
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
