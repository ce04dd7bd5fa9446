//! File-level implementations of the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use quantsel_core::decision::DrawLosses;
use quantsel_core::pipeline::{
    aggregate, analyze, coefficient_rows, evaluate, run_replication, summarize_subset, write_rows,
    AnalysisConfig, MetricRow, TauReport,
};
use quantsel_core::rng::{self, Purpose};
use quantsel_core::simulation::{simulate_rep, SimRep};
use quantsel_core::{
    load_csv, quantile_draws, read_draws_csv, write_csv, write_draws_csv, BlockRates, CsvOptions,
    Dataset, DesignOptions, GroundTruth, PosteriorDraws, SamplerConfig, SimConfig, SubsetMask,
};

use crate::error::{CliError, CliResult};

pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const DRAWS_FILE: &str = "draws.csv";
pub const FIT_FILE: &str = "fit.json";
pub const COEFFICIENTS_FILE: &str = "coefficients.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
const REPORT_PREFIX: &str = "report_tau_";

pub fn rep_dir(out: &Path, rep: u64) -> PathBuf {
    out.join(format!("rep_{rep:03}"))
}

fn report_path(dir: &Path, tau: f64) -> PathBuf {
    dir.join(format!("{REPORT_PREFIX}{tau}.json"))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Run `f` on a pool of `jobs` threads, or on the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::usage("jobs must be positive")),
        Some(j) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()?
            .install(f)),
    }
}

fn write_dataset(d: &Dataset, path: &Path) -> CliResult<()> {
    let raw = d.raw_design();
    let (names, columns): (Vec<String>, Vec<Vec<f64>>) = d
        .column_names
        .iter()
        .zip(raw.column_iter())
        .skip(1)
        .map(|(n, c)| (n.clone(), c.iter().copied().collect()))
        .unzip();
    write_csv(path, &d.response_name, &d.y, &names, &columns)?;
    Ok(())
}

fn write_sim(dir: &Path, sim: &SimRep) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    write_dataset(&sim.train, &dir.join(TRAIN_FILE))?;
    write_dataset(&sim.test, &dir.join(TEST_FILE))?;
    write_json(&sim.truth, &dir.join(TRUTH_FILE))
}

pub fn simulate(cfg: &SimConfig, reps: u64, out: &Path) -> CliResult<()> {
    fs::create_dir_all(out)?;
    write_json(cfg, &out.join("simulation.json"))?;
    (0..reps).into_par_iter().try_for_each(|rep| {
        let sim = simulate_rep(cfg, rep)?;
        write_sim(&rep_dir(out, rep), &sim)
    })
}

#[derive(Debug, Serialize)]
struct FitSummary<'a> {
    response: &'a str,
    columns: &'a [String],
    n: usize,
    p: usize,
    seed: u64,
    rep: u64,
    sampler: &'a SamplerConfig,
    acceptance_rates: BlockRates,
}

fn write_fit(
    dir: &Path,
    train: &Dataset,
    pd: &PosteriorDraws,
    cfg: &SamplerConfig,
    seed: u64,
    rep: u64,
) -> CliResult<()> {
    write_draws_csv(pd, dir.join(DRAWS_FILE))?;
    let summary = FitSummary {
        response: &train.response_name,
        columns: &train.column_names,
        n: train.n(),
        p: train.p(),
        seed,
        rep,
        sampler: cfg,
        acceptance_rates: pd.acceptance_rates,
    };
    write_json(&summary, &dir.join(FIT_FILE))
}

pub fn load_train(path: &Path, response: &str) -> CliResult<Dataset> {
    Ok(load_csv(path, &CsvOptions::new(response))?)
}

/// Held-out rows scaled with the training parameters.
pub fn load_test(path: &Path, response: &str, train: &Dataset) -> CliResult<Dataset> {
    let opts = CsvOptions {
        response: response.to_string(),
        design: DesignOptions {
            intercept: true,
            standardize: false,
        },
    };
    let raw = load_csv(path, &opts)?;
    if raw.column_names != train.column_names {
        return Err(CliError::usage(format!(
            "test columns {:?} differ from training columns {:?}",
            raw.column_names, train.column_names
        )));
    }
    Ok(Dataset::with_standardization(
        response,
        raw.y.clone(),
        raw.column_names.clone(),
        &raw.x,
        train.standardization.clone(),
    )?)
}

fn load_draws(path: &Path, train: &Dataset) -> CliResult<PosteriorDraws> {
    let pd = read_draws_csv(path)?;
    if pd.p != train.p() {
        return Err(CliError::usage(format!(
            "draws have {} coefficients, training design has {} columns",
            pd.p,
            train.p()
        )));
    }
    Ok(pd)
}

pub fn fit(
    train_path: &Path,
    response: &str,
    cfg: &SamplerConfig,
    seed: u64,
    rep: u64,
    out: &Path,
) -> CliResult<()> {
    let train = load_train(train_path, response)?;
    let pd = quantsel_core::model::sample_posterior_with_rng(
        &train,
        cfg,
        rng::stream(seed, rep, Purpose::Sampler),
    )?;
    fs::create_dir_all(out)?;
    write_fit(out, &train, &pd, cfg, seed, rep)
}

fn write_reports(dir: &Path, reports: &[TauReport], names: &[String]) -> CliResult<()> {
    let mut rows = Vec::new();
    for r in reports {
        write_json(r, &report_path(dir, r.tau()))?;
        rows.extend(r.coefficient_rows(names));
    }
    write_rows(&rows, dir.join(COEFFICIENTS_FILE))?;
    Ok(())
}

pub fn select(
    train_path: &Path,
    draws_path: &Path,
    response: &str,
    cfg: &AnalysisConfig,
    subset: Option<&str>,
    out: &Path,
) -> CliResult<()> {
    let train = load_train(train_path, response)?;
    let pd = load_draws(draws_path, &train)?;
    fs::create_dir_all(out)?;
    if let Some(text) = subset {
        let s = SubsetMask::parse_one_based(text, train.p())?;
        if s.is_empty() {
            return Err(CliError::usage("subset is empty"));
        }
        let rows = cfg
            .taus
            .par_iter()
            .map(|&tau| {
                let qd = quantile_draws(&pd, &train.x, tau)?;
                let losses = DrawLosses::new(&qd, &train.x)?;
                let summary =
                    summarize_subset(&train, &qd, &losses, &s, "subset", cfg.credible_level)?;
                Ok(coefficient_rows(tau, &summary, &train.column_names))
            })
            .collect::<quantsel_core::Result<Vec<_>>>()?;
        write_rows(&rows.concat(), out.join(COEFFICIENTS_FILE))?;
        return Ok(());
    }
    let analyses = analyze(&train, &pd, cfg)?;
    let reports: Vec<TauReport> = analyses
        .iter()
        .map(|a| TauReport::new(a, cfg.credible_level))
        .collect();
    for a in &analyses {
        a.candidates
            .save_csv(out.join(format!("candidates_tau_{}.csv", a.tau)))?;
    }
    write_reports(out, &reports, &train.column_names)
}

/// Every `report_tau_*.json` in `dir`, ordered by level.
pub fn read_reports(dir: &Path) -> CliResult<Vec<TauReport>> {
    let mut reports = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with(REPORT_PREFIX) && name.ends_with(".json") {
            let text = fs::read_to_string(&path)?;
            let report: TauReport = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            reports.push(report);
        }
    }
    if reports.is_empty() {
        return Err(CliError::usage(format!("no reports found in {}", dir.display())));
    }
    reports.sort_by(|a, b| a.tau().total_cmp(&b.tau()));
    Ok(reports)
}

pub struct EvaluateInputs<'a> {
    pub train: &'a Path,
    pub test: &'a Path,
    pub truth: &'a Path,
    pub draws: &'a Path,
    pub reports: &'a Path,
}

pub fn evaluate_files(
    inputs: &EvaluateInputs<'_>,
    response: &str,
    rep: u64,
    out: &Path,
) -> CliResult<()> {
    let train = load_train(inputs.train, response)?;
    let test = load_test(inputs.test, response, &train)?;
    let truth: GroundTruth = serde_json::from_str(&fs::read_to_string(inputs.truth)?)?;
    if truth.p() != train.p() {
        return Err(CliError::usage(format!(
            "truth has {} coefficients, design has {} columns",
            truth.p(),
            train.p()
        )));
    }
    let pd = load_draws(inputs.draws, &train)?;
    let reports = read_reports(inputs.reports)?;
    let rows = evaluate(rep, &reports, &pd, &test, &truth)?;
    write_rows(&rows, out)?;
    Ok(())
}

pub fn read_metrics(path: &Path) -> CliResult<Vec<MetricRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<Result<Vec<MetricRow>, _>>()?)
}

pub fn aggregate_files(inputs: &[PathBuf], out: &Path) -> CliResult<()> {
    let mut rows = Vec::new();
    for p in inputs {
        rows.extend(read_metrics(p)?);
    }
    write_rows(&aggregate(&rows), out)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    simulation: &'a SimConfig,
    reps: u64,
    sampler: &'a SamplerConfig,
    analysis: &'a AnalysisConfig,
}

pub fn pipeline(
    sim: &SimConfig,
    reps: u64,
    sampler: &SamplerConfig,
    analysis: &AnalysisConfig,
    out: &Path,
) -> CliResult<()> {
    fs::create_dir_all(out)?;
    write_json(
        &RunManifest {
            simulation: sim,
            reps,
            sampler,
            analysis,
        },
        &out.join("run.json"),
    )?;
    let metrics = (0..reps)
        .into_par_iter()
        .map(|rep| -> CliResult<Vec<MetricRow>> {
            let r = run_replication(sim, rep, sampler, analysis)?;
            let dir = rep_dir(out, rep);
            write_sim(&dir, &r.sim)?;
            write_fit(&dir, &r.sim.train, &r.draws, sampler, sim.seed, rep)?;
            write_reports(&dir, &r.reports, &r.sim.train.column_names)?;
            write_rows(&r.metrics, dir.join(METRICS_FILE))?;
            Ok(r.metrics)
        })
        .collect::<CliResult<Vec<_>>>()?
        .concat();
    write_rows(&metrics, out.join(METRICS_FILE))?;
    write_rows(&aggregate(&metrics), out.join(AGGREGATE_FILE))?;
    Ok(())
}
