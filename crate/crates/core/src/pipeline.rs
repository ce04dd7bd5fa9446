//! End-to-end analysis at a grid of quantile levels, and scoring of the
//! result against simulation truth.
//!
//! Fitting happens on the standardized design. Every coefficient reported
//! here (point estimates, interval endpoints) is mapped back to the original
//! covariate scale draw by draw.

use crate::acceptance::{
    filter_acceptable, AcceptableFamily, AcceptanceReport, DEFAULT_EPSILON,
    DEFAULT_KEYSTONE_LEVEL,
};
use crate::dataset::Dataset;
use crate::decision::{
    optimal_action_with, posterior_action_with, quantile_type7, DrawLosses, SubsetMask,
    SubsetProjector,
};
use crate::error::{Error, Result};
use crate::model::{
    fitted_quantiles, quantile_draws, sample_posterior_with_rng, PosteriorDraws, QuantileDraws,
    SamplerConfig,
};
use crate::rng::{self, Purpose};
use crate::search::{
    branch_and_bound_with, prescreen, CandidateSet, SearchOptions, DEFAULT_MAX_P, DEFAULT_M_K,
};
use crate::simulation::{
    coverage_and_width, metrics, non_crossing_rate, selection_metrics, simulate_rep,
    GroundTruth, SimConfig, SimRep, DEFAULT_TAU_GRID,
};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub taus: Vec<f64>,
    pub epsilon: f64,
    pub m_k: usize,
    pub prescreen_limit: usize,
    pub credible_level: f64,
    pub keystone_level: f64,
    pub parallel_search: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            taus: DEFAULT_TAU_GRID.to_vec(),
            epsilon: DEFAULT_EPSILON,
            m_k: DEFAULT_M_K,
            prescreen_limit: DEFAULT_MAX_P,
            credible_level: 0.95,
            keystone_level: DEFAULT_KEYSTONE_LEVEL,
            parallel_search: false,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taus.is_empty() {
            return Err(Error::InvalidArgument("empty quantile grid".into()));
        }
        if let Some(t) = self.taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "quantile levels must lie in (0, 1), got {t}"
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        if self.m_k == 0 {
            return Err(Error::InvalidArgument("m_k must be positive".into()));
        }
        if self.prescreen_limit == 0 || self.prescreen_limit > DEFAULT_MAX_P {
            return Err(Error::InvalidArgument(format!(
                "prescreen limit must lie in 1..={DEFAULT_MAX_P}, got {}",
                self.prescreen_limit
            )));
        }
        if !(self.credible_level > 0.0 && self.credible_level < 1.0) {
            return Err(Error::InvalidArgument("credible level must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Point estimates and equal-tailed intervals for one subset, on the original
/// covariate scale. Columns outside the subset carry `0` and `(0, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSummary {
    pub label: String,
    pub subset: SubsetMask,
    pub estimate: Vec<f64>,
    pub intervals: Vec<(f64, f64)>,
    pub expected_loss: f64,
}

impl SubsetSummary {
    /// Predicted quantiles at the rows of a raw design.
    pub fn predict(&self, x_raw: &DMatrix<f64>) -> Vec<f64> {
        (x_raw * DVector::from_column_slice(&self.estimate))
            .iter()
            .copied()
            .collect()
    }
}

/// Coefficient summary for an arbitrary subset at one level.
pub fn summarize_subset(
    train: &Dataset,
    qd: &QuantileDraws,
    losses: &DrawLosses,
    subset: &SubsetMask,
    label: &str,
    level: f64,
) -> Result<SubsetSummary> {
    let proj = SubsetProjector::new(&train.x, subset)?;
    let action = optimal_action_with(&proj, &losses.qhat, qd.tau)?;
    let pa = posterior_action_with(&proj, qd)?;
    let std = &train.standardization;
    let estimate = std.destandardize(&action.delta)?;
    let p = train.p();
    // raw-scale draws, one column per coefficient
    let mut raw = vec![Vec::with_capacity(pa.draws.nrows()); p];
    for m in 0..pa.draws.nrows() {
        let row: Vec<f64> = pa.draws.row(m).iter().copied().collect();
        let full = std.destandardize(&proj.expand(&row))?;
        for (col, v) in raw.iter_mut().zip(full) {
            col.push(v);
        }
    }
    let lo_p = (1.0 - level) / 2.0;
    let intervals = raw
        .into_iter()
        .map(|mut v| {
            v.sort_by(f64::total_cmp);
            (quantile_type7(&v, lo_p), quantile_type7(&v, 1.0 - lo_p))
        })
        .collect();
    Ok(SubsetSummary {
        label: label.to_string(),
        subset: subset.clone(),
        estimate,
        intervals,
        expected_loss: losses.expected_loss(&action),
    })
}

/// Everything computed at one quantile level.
#[derive(Debug, Clone)]
pub struct TauAnalysis {
    pub tau: f64,
    pub prescreened: Option<SubsetMask>,
    pub candidates: CandidateSet,
    pub family: AcceptableFamily,
    pub report: AcceptanceReport,
    pub s_full: SubsetSummary,
    pub s_small: Option<SubsetSummary>,
}

pub fn analyze_tau(
    train: &Dataset,
    pd: &PosteriorDraws,
    tau: f64,
    cfg: &AnalysisConfig,
) -> Result<TauAnalysis> {
    let qd = quantile_draws(pd, &train.x, tau)?;
    let losses = DrawLosses::new(&qd, &train.x)?;
    let p = train.p();
    let prescreened = if p > cfg.prescreen_limit {
        Some(prescreen(pd, cfg.prescreen_limit)?)
    } else {
        None
    };
    let opts = SearchOptions {
        tau,
        m_k: cfg.m_k,
        universe: prescreened.clone(),
        parallel: cfg.parallel_search,
        ..SearchOptions::default()
    };
    let (candidates, _) = branch_and_bound_with(&losses.qhat, &train.x, &opts)?;
    let family = filter_acceptable(&candidates, &qd, &train.x, cfg.epsilon)?;
    let report = AcceptanceReport::new(
        &family,
        &train.column_names,
        &opts.always_include,
        cfg.keystone_level,
    )?;
    let s_full = summarize_subset(
        train,
        &qd,
        &losses,
        &SubsetMask::full(p),
        "s_full",
        cfg.credible_level,
    )?;
    let s_small = family
        .s_small
        .as_ref()
        .map(|s| summarize_subset(train, &qd, &losses, s, "s_small", cfg.credible_level))
        .transpose()?;
    Ok(TauAnalysis {
        tau,
        prescreened,
        candidates,
        family,
        report,
        s_full,
        s_small,
    })
}

/// Analyses at every level of the grid, in grid order.
pub fn analyze(train: &Dataset, pd: &PosteriorDraws, cfg: &AnalysisConfig) -> Result<Vec<TauAnalysis>> {
    cfg.validate()?;
    cfg.taus
        .par_iter()
        .map(|&tau| analyze_tau(train, pd, tau, cfg))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub tau: f64,
    pub subset: String,
    pub index: usize,
    pub name: String,
    pub selected: bool,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

pub fn coefficient_rows(tau: f64, summary: &SubsetSummary, names: &[String]) -> Vec<CoefficientRow> {
    (0..summary.estimate.len())
        .map(|j| CoefficientRow {
            tau,
            subset: summary.label.clone(),
            index: j + 1,
            name: names[j].clone(),
            selected: summary.subset.contains(j),
            estimate: summary.estimate[j],
            lo: summary.intervals[j].0,
            hi: summary.intervals[j].1,
        })
        .collect()
}

/// JSON report for one level: the acceptable family plus the coefficient
/// summaries of the full and smallest acceptable subsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauReport {
    #[serde(flatten)]
    pub acceptance: AcceptanceReport,
    pub prescreened: Option<SubsetMask>,
    pub n_candidates: usize,
    pub credible_level: f64,
    pub s_full_summary: SubsetSummary,
    pub s_small_summary: Option<SubsetSummary>,
}

impl TauReport {
    pub fn new(a: &TauAnalysis, credible_level: f64) -> TauReport {
        TauReport {
            acceptance: a.report.clone(),
            prescreened: a.prescreened.clone(),
            n_candidates: a.candidates.len(),
            credible_level,
            s_full_summary: a.s_full.clone(),
            s_small_summary: a.s_small.clone(),
        }
    }

    pub fn tau(&self) -> f64 {
        self.acceptance.tau
    }

    /// Long-format coefficient rows, smallest subset first.
    pub fn coefficient_rows(&self, names: &[String]) -> Vec<CoefficientRow> {
        let mut rows = Vec::new();
        if let Some(s) = &self.s_small_summary {
            rows.extend(coefficient_rows(self.tau(), s, names));
        }
        rows.extend(coefficient_rows(self.tau(), &self.s_full_summary, names));
        rows
    }
}

pub fn write_rows<T: Serialize>(rows: &[T], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub rep: u64,
    pub tau: f64,
    pub method: String,
    pub metric: String,
    pub value: f64,
}

/// Predictions of the posterior-mean model quantile at the test rows.
pub fn qhat_predictions(pd: &PosteriorDraws, test: &Dataset, tau: f64) -> Result<Vec<f64>> {
    Ok(fitted_quantiles(&quantile_draws(pd, &test.x, tau)?))
}

/// Score per-level reports against the truth. Non-crossing rates for adjacent
/// levels `(τ_k, τ_{k+1})` of the grid are reported under `τ_k`. The true
/// quantile function is scored as method `truth` for reference.
pub fn evaluate(
    rep: u64,
    reports: &[TauReport],
    pd: &PosteriorDraws,
    test: &Dataset,
    truth: &GroundTruth,
) -> Result<Vec<MetricRow>> {
    let x_raw = test.raw_design();
    let mut rows = Vec::new();
    let mut push = |tau: f64, method: &str, metric: &str, value: f64| {
        rows.push(MetricRow {
            rep,
            tau,
            method: method.to_string(),
            metric: metric.to_string(),
            value,
        })
    };
    let mut preds: Vec<Vec<(String, Vec<f64>)>> = Vec::new();
    for a in reports {
        let tau = a.tau();
        let beta = truth.beta_star(tau);
        let mut at_tau = Vec::new();
        let mut summaries = vec![&a.s_full_summary];
        if let Some(s) = &a.s_small_summary {
            summaries.insert(0, s);
        }
        for s in summaries {
            let pred = s.predict(x_raw);
            let m = metrics(&pred, truth, &test.y, x_raw, tau)?;
            let (cover, width) = coverage_and_width(&s.intervals, &beta)?;
            let (tpr, tnr) = selection_metrics(&s.subset, truth, tau);
            push(tau, &s.label, "mse", m.mse);
            push(tau, &s.label, "check", m.check);
            push(tau, &s.label, "calib", m.calib);
            push(tau, &s.label, "coverage", cover);
            push(tau, &s.label, "width", width);
            push(tau, &s.label, "tpr", tpr);
            push(tau, &s.label, "tnr", tnr);
            push(tau, &s.label, "size", s.subset.len() as f64);
            push(
                tau,
                &s.label,
                "het_selected",
                f64::from(u8::from(s.subset.contains(truth.het - 1))),
            );
            at_tau.push((s.label.clone(), pred));
        }
        let q = qhat_predictions(pd, test, tau)?;
        let m = metrics(&q, truth, &test.y, x_raw, tau)?;
        push(tau, "q_hat", "mse", m.mse);
        push(tau, "q_hat", "check", m.check);
        push(tau, "q_hat", "calib", m.calib);
        at_tau.push(("q_hat".to_string(), q));
        let t = truth.quantiles(x_raw, tau);
        let m = metrics(&t, truth, &test.y, x_raw, tau)?;
        push(tau, "truth", "mse", m.mse);
        push(tau, "truth", "check", m.check);
        push(tau, "truth", "calib", m.calib);
        at_tau.push(("truth".to_string(), t));
        push(tau, "s_small", "family_size", a.acceptance.n_acceptable as f64);
        preds.push(at_tau);
    }
    for k in 0..reports.len().saturating_sub(1) {
        for (label, lo) in &preds[k] {
            if let Some((_, hi)) = preds[k + 1].iter().find(|(l, _)| l == label) {
                let ncr = non_crossing_rate(lo, hi)?;
                push(reports[k].tau(), label, "ncr", ncr);
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub tau: f64,
    pub method: String,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
}

/// Mean and sample standard deviation per (τ, method, metric), sorted by key.
pub fn aggregate(rows: &[MetricRow]) -> Vec<AggregateRow> {
    let mut sorted: Vec<&MetricRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.tau
            .total_cmp(&b.tau)
            .then_with(|| a.method.cmp(&b.method))
            .then_with(|| a.metric.cmp(&b.metric))
            .then(a.rep.cmp(&b.rep))
    });
    let mut out = Vec::new();
    for group in sorted.chunk_by(|a, b| a.tau == b.tau && a.method == b.method && a.metric == b.metric) {
        let vals: Vec<f64> = group.iter().map(|r| r.value).collect();
        let (mean, sd) = crate::dataset::mean_sd(&vals);
        out.push(AggregateRow {
            tau: group[0].tau,
            method: group[0].method.clone(),
            metric: group[0].metric.clone(),
            count: vals.len(),
            mean,
            sd,
        });
    }
    out
}

/// Look up an aggregated value.
pub fn lookup(agg: &[AggregateRow], tau: f64, method: &str, metric: &str) -> Option<f64> {
    agg.iter()
        .find(|r| r.tau == tau && r.method == method && r.metric == metric)
        .map(|r| r.mean)
}

#[derive(Debug, Clone)]
pub struct Replication {
    pub rep: u64,
    pub sim: SimRep,
    pub draws: PosteriorDraws,
    pub analyses: Vec<TauAnalysis>,
    pub reports: Vec<TauReport>,
    pub metrics: Vec<MetricRow>,
}

/// Simulate, fit, analyze and score one repetition.
pub fn run_replication(
    sim: &SimConfig,
    rep: u64,
    sampler: &SamplerConfig,
    analysis: &AnalysisConfig,
) -> Result<Replication> {
    let data = simulate_rep(sim, rep)?;
    let draws = sample_posterior_with_rng(
        &data.train,
        sampler,
        rng::stream(sim.seed, rep, Purpose::Sampler),
    )?;
    let analyses = analyze(&data.train, &draws, analysis)?;
    let reports: Vec<TauReport> = analyses
        .iter()
        .map(|a| TauReport::new(a, analysis.credible_level))
        .collect();
    let metrics = evaluate(rep, &reports, &draws, &data.test, &data.truth)?;
    Ok(Replication {
        rep,
        sim: data,
        draws,
        analyses,
        reports,
        metrics,
    })
}
