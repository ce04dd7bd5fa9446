//! Synthetic location-scale data and the metrics used to score estimates
//! against the known truth.
//!
//! Covariates come from a Gaussian copula with uniform marginals and
//! correlation `rho^|l - j|`. Every fourth covariate index, starting at 2, is
//! active; the median of those indices carries a pure scale effect of size
//! `h`, the others a location effect of 2.

use crate::dataset::{Dataset, DesignOptions};
use crate::decision::SubsetMask;
use crate::error::{Error, Result};
use crate::normal::{normal_cdf, quantile_unchecked};
use crate::rng::{self, Purpose};
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TAU_GRID: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

/// Coefficients this close to zero count as inactive.
const ACTIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub het_ratio: f64,
    pub rho: f64,
    pub seed: u64,
    pub n_test: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 500,
            p: 20,
            het_ratio: 1.0,
            rho: 0.5,
            seed: 1,
            n_test: 1000,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p < 6 {
            return Err(Error::InvalidArgument(format!(
                "p must be at least 6 for the active index scheme, got {}",
                self.p
            )));
        }
        if self.n <= self.p {
            return Err(Error::TooFewRows {
                n: self.n,
                p: self.p,
            });
        }
        if self.n_test == 0 {
            return Err(Error::InvalidArgument("n_test must be positive".into()));
        }
        if !(self.het_ratio > 0.0 && self.het_ratio.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "het_ratio must be positive, got {}",
                self.het_ratio
            )));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "rho must lie in (-1, 1), got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// True coefficients. Indices in `hom` and `het` are 1-based design columns
/// (the intercept is column 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub xi_star: Vec<f64>,
    pub gamma_star: Vec<f64>,
    pub hom: Vec<usize>,
    pub het: usize,
    pub h: f64,
}

impl GroundTruth {
    pub fn p(&self) -> usize {
        self.xi_star.len()
    }

    /// `β*(τ) = ξ* + Φ⁻¹(τ) γ*`.
    pub fn beta_star(&self, tau: f64) -> Vec<f64> {
        let z = quantile_unchecked(tau);
        self.xi_star
            .iter()
            .zip(&self.gamma_star)
            .map(|(x, g)| x + z * g)
            .collect()
    }

    /// 0-based columns `j >= 1` with a non-zero quantile coefficient at τ.
    pub fn active_set(&self, tau: f64) -> SubsetMask {
        let beta = self.beta_star(tau);
        SubsetMask::new(
            (1..self.p())
                .filter(|&j| beta[j].abs() > ACTIVE_TOL)
                .collect(),
        )
        .expect("distinct")
    }

    /// True conditional quantile at each row of a raw design.
    pub fn quantiles(&self, x_raw: &DMatrix<f64>, tau: f64) -> Vec<f64> {
        let beta = DVector::from_vec(self.beta_star(tau));
        (x_raw * beta).iter().copied().collect()
    }
}

/// Active indices `I = {2 + 4j : j = 0..=⌊p/4⌋} ∩ [2, p]`, split into the
/// scale-effect index (the floored median of `I`) and the rest. 1-based.
pub fn make_indices(p: usize) -> Result<(Vec<usize>, usize)> {
    if p < 6 {
        return Err(Error::InvalidArgument(format!(
            "p must be at least 6 for the active index scheme, got {p}"
        )));
    }
    let set: Vec<usize> = (0..=p / 4).map(|j| 2 + 4 * j).filter(|&i| i <= p).collect();
    let len = set.len();
    let het = if len % 2 == 1 {
        set[len / 2]
    } else {
        (set[len / 2 - 1] + set[len / 2]) / 2
    };
    let hom = set.into_iter().filter(|&i| i != het).collect();
    Ok((hom, het))
}

/// `n x p` design: intercept column, then `p - 1` copula covariates in (0, 1).
pub fn gen_covariates<R: Rng>(n: usize, p: usize, rho: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (-1, 1), got {rho}")));
    }
    if p < 1 {
        return Err(Error::InvalidArgument("p must be positive".into()));
    }
    let k = p - 1;
    let sigma = DMatrix::from_fn(k, k, |a, b| rho.powi((a as i32 - b as i32).abs()));
    let chol = Cholesky::new(sigma)
        .ok_or_else(|| Error::InvalidArgument("copula correlation not positive definite".into()))?;
    let l = chol.l();
    let mut x = DMatrix::from_element(n, p, 1.0);
    let mut z = DVector::zeros(k);
    for i in 0..n {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let c = &l * &z;
        for j in 0..k {
            x[(i, j + 1)] = normal_cdf(c[j]);
        }
    }
    Ok(x)
}

/// `h = var(Xξ*) / het_ratio`, with the sample (n - 1) variance.
pub fn solve_h(xi_star: &[f64], x: &DMatrix<f64>, het_ratio: f64) -> Result<f64> {
    if !(het_ratio > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "het_ratio must be positive, got {het_ratio}"
        )));
    }
    if xi_star.len() != x.ncols() {
        return Err(Error::Dimension("xi_star length differs from design".into()));
    }
    let loc: Vec<f64> = (x * DVector::from_column_slice(xi_star)).iter().copied().collect();
    let (_, sd) = crate::dataset::mean_sd(&loc);
    let var = sd * sd;
    if !(var > 0.0) {
        return Err(Error::InvalidArgument("location part has zero variance".into()));
    }
    Ok(var / het_ratio)
}

/// Truth for a given training design.
pub fn make_truth(p: usize, x_train: &DMatrix<f64>, het_ratio: f64) -> Result<GroundTruth> {
    let (hom, het) = make_indices(p)?;
    let mut xi_star = vec![0.0; p];
    let mut gamma_star = vec![0.0; p];
    xi_star[0] = 2.0;
    gamma_star[0] = 1.0;
    for &j in &hom {
        xi_star[j - 1] = 2.0;
    }
    let h = solve_h(&xi_star, x_train, het_ratio)?;
    gamma_star[het - 1] = h;
    Ok(GroundTruth {
        xi_star,
        gamma_star,
        hom,
        het,
        h,
    })
}

/// `y_i = x_i'ξ* + (x_i'γ*) ε_i`.
pub fn gen_response<R: Rng>(x: &DMatrix<f64>, truth: &GroundTruth, rng: &mut R) -> Result<Vec<f64>> {
    if x.ncols() != truth.p() {
        return Err(Error::Dimension("design and truth disagree on p".into()));
    }
    let loc = x * DVector::from_column_slice(&truth.xi_star);
    let scale = x * DVector::from_column_slice(&truth.gamma_star);
    if let Some(i) = scale.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "non-positive scale {} at row {}",
            scale[i],
            i + 1
        )));
    }
    Ok((0..x.nrows())
        .map(|i| loc[i] + scale[i] * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

/// One simulated repetition, training data standardized for fitting and the
/// held-out rows standardized with the training parameters.
#[derive(Debug, Clone)]
pub struct SimRep {
    pub train: Dataset,
    pub test: Dataset,
    pub truth: GroundTruth,
}

pub fn covariate_names(p: usize) -> Vec<String> {
    (2..=p).map(|j| format!("x{j}")).collect()
}

/// Generate repetition `rep` of the design described by `cfg`.
pub fn simulate_rep(cfg: &SimConfig, rep: u64) -> Result<SimRep> {
    cfg.validate()?;
    let x_train = gen_covariates(
        cfg.n,
        cfg.p,
        cfg.rho,
        &mut rng::stream(cfg.seed, rep, Purpose::TrainCovariates),
    )?;
    let truth = make_truth(cfg.p, &x_train, cfg.het_ratio)?;
    let y_train = gen_response(
        &x_train,
        &truth,
        &mut rng::stream(cfg.seed, rep, Purpose::TrainNoise),
    )?;
    let x_test = gen_covariates(
        cfg.n_test,
        cfg.p,
        cfg.rho,
        &mut rng::stream(cfg.seed, rep, Purpose::TestCovariates),
    )?;
    let y_test = gen_response(
        &x_test,
        &truth,
        &mut rng::stream(cfg.seed, rep, Purpose::TestNoise),
    )?;
    let (train, test) = datasets_from_raw(&x_train, y_train, &x_test, y_test)?;
    Ok(SimRep { train, test, truth })
}

/// Standardize a raw training design (intercept first) and apply the same
/// scaling to a raw test design.
pub fn datasets_from_raw(
    x_train: &DMatrix<f64>,
    y_train: Vec<f64>,
    x_test: &DMatrix<f64>,
    y_test: Vec<f64>,
) -> Result<(Dataset, Dataset)> {
    let p = x_train.ncols();
    let columns: Vec<Vec<f64>> = (1..p).map(|j| x_train.column(j).iter().copied().collect()).collect();
    let train = Dataset::from_columns("y", y_train, covariate_names(p), columns, DesignOptions::default())?;
    let test = Dataset::with_standardization(
        "y",
        y_test,
        train.column_names.clone(),
        x_test,
        train.standardization.clone(),
    )?;
    Ok((train, test))
}

/// `ρ_τ(a, b) = (a − b)(τ − 1[a − b < 0])`.
pub fn check_loss(a: f64, b: f64, tau: f64) -> f64 {
    let u = a - b;
    u * (tau - if u < 0.0 { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mse: f64,
    pub check: f64,
    pub calib: f64,
}

/// Accuracy of predicted quantiles `pred` at the test rows.
pub fn metrics(
    pred: &[f64],
    truth: &GroundTruth,
    y_test: &[f64],
    x_test_raw: &DMatrix<f64>,
    tau: f64,
) -> Result<MetricReport> {
    let n = y_test.len();
    if pred.len() != n || x_test_raw.nrows() != n {
        return Err(Error::Dimension(format!(
            "{} predictions, {} responses, {} design rows",
            pred.len(),
            n,
            x_test_raw.nrows()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no test rows".into()));
    }
    let q_true = truth.quantiles(x_test_raw, tau);
    let nf = n as f64;
    let mse = q_true.iter().zip(pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / nf;
    let check = y_test.iter().zip(pred).map(|(y, q)| check_loss(*y, *q, tau)).sum::<f64>() / nf;
    let calib = y_test.iter().zip(pred).filter(|(y, q)| y <= q).count() as f64 / nf;
    Ok(MetricReport { mse, check, calib })
}

/// True positive and true negative rates of a selection, over non-intercept
/// columns. A rate with an empty reference set is reported as 1.
pub fn selection_metrics(selected: &SubsetMask, truth: &GroundTruth, tau: f64) -> (f64, f64) {
    let active = truth.active_set(tau);
    let (mut tp, mut tn, mut n_inactive) = (0usize, 0usize, 0usize);
    for j in 1..truth.p() {
        let chosen = selected.contains(j);
        if active.contains(j) {
            tp += usize::from(chosen);
        } else {
            n_inactive += 1;
            tn += usize::from(!chosen);
        }
    }
    let rate = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
    (rate(tp, active.len()), rate(tn, n_inactive))
}

/// Fraction of points where the lower-level prediction is strictly below the
/// upper-level one.
pub fn non_crossing_rate(pred_lo: &[f64], pred_hi: &[f64]) -> Result<f64> {
    if pred_lo.len() != pred_hi.len() || pred_lo.is_empty() {
        return Err(Error::Dimension(format!(
            "prediction lengths {} and {}",
            pred_lo.len(),
            pred_hi.len()
        )));
    }
    let ok = pred_lo.iter().zip(pred_hi).filter(|(a, b)| a < b).count();
    Ok(ok as f64 / pred_lo.len() as f64)
}

/// Share of coefficients whose interval contains the truth, and mean width.
pub fn coverage_and_width(intervals: &[(f64, f64)], truth: &[f64]) -> Result<(f64, f64)> {
    if intervals.len() != truth.len() || truth.is_empty() {
        return Err(Error::Dimension("intervals and truth differ in length".into()));
    }
    let k = truth.len() as f64;
    let cover = intervals
        .iter()
        .zip(truth)
        .filter(|((lo, hi), t)| lo <= t && *t <= hi)
        .count() as f64
        / k;
    let width = intervals.iter().map(|(lo, hi)| hi - lo).sum::<f64>() / k;
    Ok((cover, width))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn index_scheme() {
        assert_eq!(make_indices(10).unwrap(), (vec![2, 10], 6));
        assert_eq!(make_indices(20).unwrap(), (vec![2, 6, 14, 18], 10));
        assert_eq!(make_indices(8).unwrap(), (vec![2, 6], 4));
        assert!(make_indices(5).is_err());
    }

    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn copula_covariates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = gen_covariates(2000, 5, 0.0, &mut rng).unwrap();
        assert!(x.column(0).iter().all(|&v| v == 1.0));
        assert!(x.columns(1, 4).iter().all(|&v| v > 0.0 && v < 1.0));
        let c: Vec<Vec<f64>> = (1..5).map(|j| x.column(j).iter().copied().collect()).collect();
        assert!(corr(&c[0], &c[1]).abs() < 0.1);

        let x = gen_covariates(2000, 5, 0.5, &mut rng).unwrap();
        let a: Vec<f64> = x.column(1).iter().copied().collect();
        let b: Vec<f64> = x.column(2).iter().copied().collect();
        // Spearman correlation of a Gaussian copula
        let target = 6.0 / std::f64::consts::PI * (0.5_f64 / 2.0).asin();
        assert!((corr(&ranks(&a), &ranks(&b)) - target).abs() < 0.1);
    }

    #[test]
    fn het_scale_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = gen_covariates(500, 10, 0.5, &mut rng).unwrap();
        let truth = make_truth(10, &x, 1.0).unwrap();
        let loc: Vec<f64> = (&x * DVector::from_column_slice(&truth.xi_star)).iter().copied().collect();
        let (_, sd) = crate::dataset::mean_sd(&loc);
        assert!((sd * sd / truth.h - 1.0).abs() < 1e-12);
        let half = make_truth(10, &x, 0.5).unwrap();
        assert!((half.h - 2.0 * truth.h).abs() < 1e-12);
        assert_eq!(truth.gamma_star[5], truth.h);
        assert_eq!(truth.xi_star[5], 0.0);
        assert_eq!(truth.xi_star[1], 2.0);
        assert_eq!(truth.xi_star[9], 2.0);
    }

    #[test]
    fn solve_h_by_formula() {
        // location part (0, 2) has sample variance 2
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        assert!((solve_h(&[0.0, 2.0], &x, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((solve_h(&[0.0, 2.0], &x, 0.5).unwrap() - 4.0).abs() < 1e-15);
        assert!(solve_h(&[1.0, 0.0], &x, 1.0).is_err());
        assert!(solve_h(&[0.0, 2.0], &x, 0.0).is_err());
    }

    #[test]
    fn quantile_coefficients() {
        let truth = GroundTruth {
            xi_star: vec![2.0, 2.0, 0.0],
            gamma_star: vec![1.0, 0.0, 1.5],
            hom: vec![2],
            het: 3,
            h: 1.5,
        };
        let z = quantile_unchecked(0.9);
        let b = truth.beta_star(0.9);
        assert!((b[0] - (2.0 + z)).abs() < 1e-15);
        assert_eq!(b[1], 2.0);
        let lo = truth.beta_star(0.1);
        assert!((b[2] + lo[2]).abs() < 1e-12);
        assert_eq!(truth.active_set(0.5).to_one_based(), vec![2]);
        assert_eq!(truth.active_set(0.9).to_one_based(), vec![2, 3]);
    }

    #[test]
    fn homoscedastic_noise_has_unit_sd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = gen_covariates(2000, 6, 0.5, &mut rng).unwrap();
        let truth = GroundTruth {
            xi_star: vec![2.0, 2.0, 0.0, 0.0, 0.0, 0.0],
            gamma_star: vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            hom: vec![2],
            het: 4,
            h: 0.0,
        };
        let y = gen_response(&x, &truth, &mut rng).unwrap();
        let r: Vec<f64> = (0..2000).map(|i| y[i] - 2.0 - 2.0 * x[(i, 1)]).collect();
        let (_, sd) = crate::dataset::mean_sd(&r);
        assert!((sd - 1.0).abs() < 0.1);
    }

    #[test]
    fn bucketed_empirical_quantile_brackets_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = gen_covariates(10_000, 6, 0.0, &mut rng).unwrap();
        let truth = make_truth(6, &x, 1.0).unwrap();
        let y = gen_response(&x, &truth, &mut rng).unwrap();
        let tau = 0.8;
        let q = truth.quantiles(&x, tau);
        // bucket on the true quantile itself; within a bucket the share of
        // y below its own true quantile should be close to tau
        let mut order: Vec<usize> = (0..10_000).collect();
        order.sort_by(|&a, &b| q[a].total_cmp(&q[b]));
        for chunk in order.chunks(2500) {
            let below = chunk.iter().filter(|&&i| y[i] <= q[i]).count() as f64;
            let share = below / chunk.len() as f64;
            assert!((share - tau).abs() < 3.0 * (tau * (1.0 - tau) / 2500.0).sqrt() + 0.01);
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let cfg = SimConfig {
            n: 60,
            p: 8,
            n_test: 30,
            ..SimConfig::default()
        };
        let a = simulate_rep(&cfg, 0).unwrap();
        let b = simulate_rep(&cfg, 0).unwrap();
        let c = simulate_rep(&cfg, 1).unwrap();
        assert_eq!(a.train.y, b.train.y);
        assert_eq!(a.test.x, b.test.x);
        assert_ne!(a.train.y, c.train.y);
        assert_eq!(a.train.column_names[1], "x2");
        assert!(SimConfig { p: 4, ..cfg }.validate().is_err());
    }

    #[test]
    fn metric_definitions() {
        let truth = GroundTruth {
            xi_star: vec![1.0, 2.0],
            gamma_star: vec![1.0, 0.0],
            hom: vec![2],
            het: 2,
            h: 0.0,
        };
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.5, 1.0, 1.0]);
        let q = truth.quantiles(&x, 0.5);
        let y = vec![0.0, 3.0, 2.0];
        let m = metrics(&q, &truth, &y, &x, 0.5).unwrap();
        assert_eq!(m.mse, 0.0);
        let mad = y.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 3.0;
        assert!((m.check - mad / 2.0).abs() < 1e-15);
        assert!((m.calib - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(check_loss(1.0, 3.0, 0.25), 1.5);
        assert_eq!(check_loss(3.0, 1.0, 0.25), 0.5);
    }

    #[test]
    fn true_quantile_calibration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = gen_covariates(4000, 8, 0.5, &mut rng).unwrap();
        let truth = make_truth(8, &x, 1.0).unwrap();
        let y = gen_response(&x, &truth, &mut rng).unwrap();
        for tau in [0.05, 0.5, 0.9] {
            let q = truth.quantiles(&x, tau);
            let m = metrics(&q, &truth, &y, &x, tau).unwrap();
            assert!((m.calib - tau).abs() < 3.0 * (tau * (1.0 - tau) / 4000.0).sqrt());
        }
        // a central interval of true quantiles covers at the nominal rate
        let lo = truth.quantiles(&x, 0.1);
        let hi = truth.quantiles(&x, 0.9);
        let inside = (0..4000).filter(|&i| lo[i] <= y[i] && y[i] <= hi[i]).count() as f64;
        assert!((inside / 4000.0 - 0.8).abs() < 3.0 * (0.16_f64 / 4000.0).sqrt());
    }

    #[test]
    fn selection_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = gen_covariates(100, 10, 0.5, &mut rng).unwrap();
        let truth = make_truth(10, &x, 1.0).unwrap();
        let active = truth.active_set(0.5).union(&SubsetMask::intercept());
        assert_eq!(active.to_one_based(), vec![1, 2, 10]);
        assert_eq!(selection_metrics(&active, &truth, 0.5), (1.0, 1.0));
        let with_het = active.union(&SubsetMask::new(vec![5]).unwrap());
        let (tpr, tnr) = selection_metrics(&with_het, &truth, 0.5);
        assert_eq!(tpr, 1.0);
        assert!((tnr - 6.0 / 7.0).abs() < 1e-15);
        assert_eq!(selection_metrics(&SubsetMask::intercept(), &truth, 0.5), (0.0, 1.0));
        assert_eq!(truth.active_set(0.9).to_one_based(), vec![2, 6, 10]);
    }

    #[test]
    fn crossing_rates() {
        let a = vec![1.0, 2.0, 3.0];
        assert_eq!(non_crossing_rate(&a, &a).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|v| v + 1.0).collect();
        assert_eq!(non_crossing_rate(&a, &b).unwrap(), 1.0);
        assert!(non_crossing_rate(&a, &b[..2]).is_err());
    }

    #[test]
    fn interval_scoring() {
        let (c, w) = coverage_and_width(&[(0.0, 1.0), (0.0, 0.0), (2.0, 3.0)], &[0.5, 0.0, 1.0]).unwrap();
        assert!((c - 2.0 / 3.0).abs() < 1e-15);
        assert!((w - 2.0 / 3.0).abs() < 1e-15);
    }
}
