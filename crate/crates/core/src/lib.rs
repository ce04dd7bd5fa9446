//! Bayesian quantile-specific coefficient estimation and subset selection.
//!
//! A linear location-log-scale regression is fitted by MCMC ([`model`]). Its
//! posterior conditional quantiles at a level τ are then summarized by linear
//! actions ([`decision`]): least-squares projections of the fitted quantiles
//! onto subsets of the covariates. Subsets are searched by branch and bound
//! ([`search`]) and filtered to those whose loss is competitive with the full
//! fit with non-negligible posterior probability ([`acceptance`]).
//! [`simulation`] and [`pipeline`] reproduce a synthetic benchmark end to end.

// Index loops mirror the matrix algebra; `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod dataset;
pub mod decision;
pub mod error;
pub mod linalg;
pub mod model;
pub mod normal;
pub mod pipeline;
pub mod rng;
pub mod search;
pub mod simulation;

pub use acceptance::{
    filter_acceptable, keystones, smallest_acceptable, variable_importance, AcceptableFamily,
    AcceptanceReport, Member,
};
pub use dataset::{load_csv, write_csv, CsvOptions, Dataset, DesignOptions, Standardization};
pub use decision::{
    credible_interval, d_s_draws, expected_loss, optimal_action, posterior_action, rss,
    OptimalAction, PosteriorAction, SubsetMask,
};
pub use error::{Error, Result};
pub use model::{
    fitted_quantiles, log_posterior, quantile_draws, read_draws_csv, sample_posterior,
    write_draws_csv, BlockRates, LlsParams, PosteriorDraws, QuantileDraws, SamplerConfig,
};
pub use normal::{inverse_normal_cdf, normal_cdf};
pub use pipeline::{AnalysisConfig, MetricRow, TauAnalysis};
pub use search::{
    branch_and_bound, exhaustive_search, prescreen, Candidate, CandidateSet, SearchOptions,
};
pub use simulation::{GroundTruth, SimConfig, DEFAULT_TAU_GRID};
