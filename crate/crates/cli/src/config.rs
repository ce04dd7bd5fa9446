//! Run parameters from flags and an optional JSON file. Flags win.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use quantsel_core::pipeline::AnalysisConfig;
use quantsel_core::{SamplerConfig, SimConfig};

use crate::error::CliResult;

/// Every key a `--config` file may set. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub het_ratio: Option<f64>,
    pub rho: Option<f64>,
    pub reps: Option<u64>,
    pub seed: Option<u64>,
    pub n_test: Option<usize>,
    pub draws: Option<usize>,
    pub burn: Option<usize>,
    pub tau: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    pub mk: Option<usize>,
    pub prescreen_limit: Option<usize>,
    pub credible_level: Option<f64>,
    pub keystone_level: Option<f64>,
    pub jobs: Option<usize>,
    pub response: Option<String>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON file with default values for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Training rows.
    #[arg(long)]
    pub n: Option<usize>,
    /// Design columns including the intercept (at least 6).
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub het_ratio: Option<f64>,
    /// Copula correlation between neighbouring covariates.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub reps: Option<u64>,
    /// Held-out rows.
    #[arg(long)]
    pub n_test: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SamplerArgs {
    /// Posterior draws kept after burn-in.
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub burn: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    /// Comma-separated quantile levels.
    #[arg(long, value_delimiter = ',')]
    pub tau: Option<Vec<f64>>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Subsets kept per size during the search.
    #[arg(long)]
    pub mk: Option<usize>,
    #[arg(long)]
    pub prescreen_limit: Option<usize>,
    #[arg(long)]
    pub credible_level: Option<f64>,
    #[arg(long)]
    pub keystone_level: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ResponseArg {
    /// Name of the response column.
    #[arg(long)]
    pub response: Option<String>,
}

impl ResponseArg {
    pub fn resolve(&self, file: &RunConfig) -> String {
        self.response
            .clone()
            .or_else(|| file.response.clone())
            .unwrap_or_else(|| "y".to_string())
    }
}

pub fn seed(common: &CommonArgs, file: &RunConfig) -> u64 {
    common.seed.or(file.seed).unwrap_or(SimConfig::default().seed)
}

pub fn jobs(common: &CommonArgs, file: &RunConfig) -> Option<usize> {
    common.jobs.or(file.jobs)
}

pub fn sim_config(a: &SimArgs, seed: u64, file: &RunConfig) -> CliResult<(SimConfig, u64)> {
    let d = SimConfig::default();
    let cfg = SimConfig {
        n: a.n.or(file.n).unwrap_or(d.n),
        p: a.p.or(file.p).unwrap_or(d.p),
        het_ratio: a.het_ratio.or(file.het_ratio).unwrap_or(d.het_ratio),
        rho: a.rho.or(file.rho).unwrap_or(d.rho),
        seed,
        n_test: a.n_test.or(file.n_test).unwrap_or(d.n_test),
    };
    cfg.validate()?;
    let reps = a.reps.or(file.reps).unwrap_or(1);
    if reps == 0 {
        return Err(crate::error::CliError::usage("reps must be positive"));
    }
    Ok((cfg, reps))
}

pub fn sampler_config(a: &SamplerArgs, file: &RunConfig) -> CliResult<SamplerConfig> {
    let d = SamplerConfig::default();
    let cfg = SamplerConfig {
        n_save: a.draws.or(file.draws).unwrap_or(d.n_save),
        n_burn: a.burn.or(file.burn).unwrap_or(d.n_burn),
        ..d
    };
    if cfg.n_save == 0 {
        return Err(crate::error::CliError::usage("draws must be positive"));
    }
    Ok(cfg)
}

pub fn analysis_config(a: &AnalysisArgs, file: &RunConfig) -> CliResult<AnalysisConfig> {
    let d = AnalysisConfig::default();
    let cfg = AnalysisConfig {
        taus: a.tau.clone().or_else(|| file.tau.clone()).unwrap_or(d.taus),
        epsilon: a.epsilon.or(file.epsilon).unwrap_or(d.epsilon),
        m_k: a.mk.or(file.mk).unwrap_or(d.m_k),
        prescreen_limit: a
            .prescreen_limit
            .or(file.prescreen_limit)
            .unwrap_or(d.prescreen_limit),
        credible_level: a.credible_level.or(file.credible_level).unwrap_or(d.credible_level),
        keystone_level: a.keystone_level.or(file.keystone_level).unwrap_or(d.keystone_level),
        parallel_search: d.parallel_search,
    };
    cfg.validate()?;
    Ok(cfg)
}
