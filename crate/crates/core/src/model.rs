//! Bayesian linear location-log-scale regression.
//!
//! `y_i ~ Normal(x_i'ξ, (σ exp(x_i'γ))²)` with Normal(0, λ²) priors on the
//! non-intercept entries of ξ and γ (λ is a standard deviation), half-Cauchy(0, 5)
//! priors on every λ, Inverse-Gamma(1/2, 1/2) on σ², and flat priors on the
//! intercept entries ξ₁, γ₁. The first design column is taken to be the intercept.
//!
//! The sampler sweeps three blocks per iteration:
//!
//! * ξ given the rest, drawn exactly from its Gaussian full conditional;
//! * (γ, log σ) jointly, by random-walk Metropolis whose proposal covariance
//!   is learned during burn-in (Haario-style) and scaled toward a 0.3
//!   acceptance rate;
//! * log λ, by coordinate-wise random-walk Metropolis with per-coordinate step
//!   sizes adapted during burn-in. The coordinates are conditionally
//!   independent given (ξ, γ), so all of them are updated in one pass.
//!
//! All adaptation stops at the end of burn-in.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::normal::quantile_unchecked;
use crate::rng::{self, Purpose};
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

const HALF_CAUCHY_SCALE: f64 = 5.0;
const IG_SHAPE: f64 = 0.5;
const IG_RATE: f64 = 0.5;
const LN_2PI: f64 = 1.837_877_066_409_345_3;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// One joint parameter value. `lambda_xi[j - 1]` is the prior scale of `xi[j]`
/// for `j >= 1`; the intercept entries carry no scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LlsParams {
    pub xi: Vec<f64>,
    pub gamma: Vec<f64>,
    pub sigma: f64,
    pub lambda_xi: Vec<f64>,
    pub lambda_gamma: Vec<f64>,
}

impl LlsParams {
    pub fn p(&self) -> usize {
        self.xi.len()
    }

    fn validate(&self, p: usize) -> Result<()> {
        if self.xi.len() != p || self.gamma.len() != p {
            return Err(Error::Dimension(format!(
                "parameter length {} / {} for design with {p} columns",
                self.xi.len(),
                self.gamma.len()
            )));
        }
        let lam = p.saturating_sub(1);
        if self.lambda_xi.len() != lam || self.lambda_gamma.len() != lam {
            return Err(Error::Dimension(format!(
                "expected {lam} local scales per block, got {} and {}",
                self.lambda_xi.len(),
                self.lambda_gamma.len()
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self
            .lambda_xi
            .iter()
            .chain(&self.lambda_gamma)
            .any(|&l| !(l > 0.0))
        {
            return Err(Error::InvalidArgument("local scales must be positive".into()));
        }
        Ok(())
    }
}

/// Post-burn-in acceptance rates. The ξ block is an exact Gibbs draw.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockRates {
    pub xi: f64,
    pub gamma_sigma: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    pub p: usize,
    pub draws: Vec<LlsParams>,
    pub burn_in_discarded: usize,
    pub acceptance_rates: BlockRates,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn mean_xi(&self) -> Vec<f64> {
        self.mean_of(|d| &d.xi)
    }

    pub fn mean_gamma(&self) -> Vec<f64> {
        self.mean_of(|d| &d.gamma)
    }

    fn mean_of(&self, f: impl Fn(&LlsParams) -> &Vec<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.p];
        for d in &self.draws {
            for (o, v) in out.iter_mut().zip(f(d)) {
                *o += v;
            }
        }
        let m = self.draws.len() as f64;
        out.iter_mut().for_each(|v| *v /= m);
        out
    }
}

/// Model-based conditional quantiles at one level: `M x n`, row-major.
#[derive(Debug, Clone)]
pub struct QuantileDraws {
    pub tau: f64,
    pub m: usize,
    pub n: usize,
    pub values: Vec<f64>,
}

impl QuantileDraws {
    pub fn new(tau: f64, m: usize, n: usize, values: Vec<f64>) -> Result<QuantileDraws> {
        if values.len() != m * n {
            return Err(Error::Dimension(format!(
                "{} values for a {m} x {n} quantile matrix",
                values.len()
            )));
        }
        if m == 0 {
            return Err(Error::InvalidArgument("need at least one draw".into()));
        }
        Ok(QuantileDraws { tau, m, n, values })
    }

    #[inline]
    pub fn row(&self, m: usize) -> &[f64] {
        &self.values[m * self.n..(m + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_save: usize,
    pub n_burn: usize,
    pub target_accept: f64,
    /// Metropolis updates of the (γ, log σ) block per sweep.
    pub gamma_steps: usize,
    /// Passes over the local scales per sweep.
    pub lambda_steps: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_save: 2500,
            n_burn: 2500,
            target_accept: 0.3,
            gamma_steps: 2,
            lambda_steps: 3,
        }
    }
}

fn check_dims(theta: &LlsParams, d: &Dataset) -> Result<()> {
    theta.validate(d.p())?;
    if d.x.nrows() != d.y.len() {
        return Err(Error::Dimension("design rows differ from response".into()));
    }
    Ok(())
}

fn half_cauchy_ln_pdf(lambda: f64) -> f64 {
    (2.0 / (PI * HALF_CAUCHY_SCALE)).ln() - (lambda / HALF_CAUCHY_SCALE).powi(2).ln_1p()
}

fn inverse_gamma_ln_pdf(v: f64) -> f64 {
    IG_SHAPE * IG_RATE.ln() - libm::lgamma(IG_SHAPE) - (IG_SHAPE + 1.0) * v.ln() - IG_RATE / v
}

fn normal_scale_ln_pdf(x: f64, sd: f64) -> f64 {
    -0.5 * LN_2PI - sd.ln() - 0.5 * (x / sd).powi(2)
}

fn mat_vec(x: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let n = x.nrows();
    let data = x.as_slice();
    let mut out = vec![0.0; n];
    for (j, &vj) in v.iter().enumerate() {
        if vj == 0.0 {
            continue;
        }
        for (o, xij) in out.iter_mut().zip(&data[j * n..(j + 1) * n]) {
            *o += xij * vj;
        }
    }
    out
}

/// Log of the unnormalized joint density of (ξ, γ, σ², λ) given the data.
/// The σ prior is the Inverse-Gamma density of σ².
pub fn log_posterior(theta: &LlsParams, d: &Dataset) -> Result<f64> {
    check_dims(theta, d)?;
    let mean = mat_vec(&d.x, &theta.xi);
    let eta = mat_vec(&d.x, &theta.gamma);
    let log_sigma = theta.sigma.ln();
    let mut ll = 0.0;
    for i in 0..d.n() {
        let log_sd = log_sigma + eta[i];
        let z = (d.y[i] - mean[i]) * (-log_sd).exp();
        ll += -0.5 * LN_2PI - log_sd - 0.5 * z * z;
    }
    let mut lp = inverse_gamma_ln_pdf(theta.sigma * theta.sigma);
    for j in 1..theta.p() {
        let (lx, lg) = (theta.lambda_xi[j - 1], theta.lambda_gamma[j - 1]);
        lp += normal_scale_ln_pdf(theta.xi[j], lx) + normal_scale_ln_pdf(theta.gamma[j], lg);
        lp += half_cauchy_ln_pdf(lx) + half_cauchy_ln_pdf(lg);
    }
    Ok(ll + lp)
}

/// Log density of the sampler's target on the unconstrained scale
/// (ξ, γ, log σ, log λ): [`log_posterior`] plus the Jacobian terms.
pub fn log_target(theta: &LlsParams, d: &Dataset) -> Result<f64> {
    let lp = log_posterior(theta, d)?;
    let jac = (2.0 * theta.sigma * theta.sigma).ln()
        + theta
            .lambda_xi
            .iter()
            .chain(&theta.lambda_gamma)
            .map(|l| l.ln())
            .sum::<f64>();
    Ok(lp + jac)
}

/// Gradient of [`log_target`] with respect to (ξ, γ, log σ, log λ_ξ, log λ_γ).
/// The ξ and γ parts are also the gradient of [`log_posterior`].
#[derive(Debug, Clone, PartialEq)]
pub struct LlsGradient {
    pub xi: Vec<f64>,
    pub gamma: Vec<f64>,
    pub log_sigma: f64,
    pub log_lambda_xi: Vec<f64>,
    pub log_lambda_gamma: Vec<f64>,
}

pub fn log_target_gradient(theta: &LlsParams, d: &Dataset) -> Result<LlsGradient> {
    check_dims(theta, d)?;
    let p = d.p();
    let n = d.n();
    let mean = mat_vec(&d.x, &theta.xi);
    let eta = mat_vec(&d.x, &theta.gamma);
    let s2 = theta.sigma * theta.sigma;
    let mut a = vec![0.0; n]; // r_i w_i
    let mut b = vec![0.0; n]; // r_i² w_i - 1
    for i in 0..n {
        let w = 1.0 / (s2 * (2.0 * eta[i]).exp());
        let r = d.y[i] - mean[i];
        a[i] = r * w;
        b[i] = r * r * w - 1.0;
    }
    let data = d.x.as_slice();
    let dot = |j: usize, v: &[f64]| -> f64 {
        data[j * n..(j + 1) * n].iter().zip(v).map(|(x, v)| x * v).sum()
    };
    let mut g_xi: Vec<f64> = (0..p).map(|j| dot(j, &a)).collect();
    let mut g_gamma: Vec<f64> = (0..p).map(|j| dot(j, &b)).collect();
    let mut g_lx = vec![0.0; p.saturating_sub(1)];
    let mut g_lg = vec![0.0; p.saturating_sub(1)];
    for j in 1..p {
        let (lx, lg) = (theta.lambda_xi[j - 1], theta.lambda_gamma[j - 1]);
        g_xi[j] -= theta.xi[j] / (lx * lx);
        g_gamma[j] -= theta.gamma[j] / (lg * lg);
        let c2 = HALF_CAUCHY_SCALE * HALF_CAUCHY_SCALE;
        g_lx[j - 1] = (theta.xi[j] / lx).powi(2) - 2.0 * lx * lx / (c2 + lx * lx);
        g_lg[j - 1] = (theta.gamma[j] / lg).powi(2) - 2.0 * lg * lg / (c2 + lg * lg);
    }
    let g_ls = b.iter().sum::<f64>() - 1.0 + 1.0 / s2;
    Ok(LlsGradient {
        xi: g_xi,
        gamma: g_gamma,
        log_sigma: g_ls,
        log_lambda_xi: g_lx,
        log_lambda_gamma: g_lg,
    })
}

/// Streaming mean and covariance (Welford).
struct RunningMoments {
    count: f64,
    mean: Vec<f64>,
    m2: DMatrix<f64>,
}

impl RunningMoments {
    fn new(dim: usize) -> Self {
        RunningMoments {
            count: 0.0,
            mean: vec![0.0; dim],
            m2: DMatrix::zeros(dim, dim),
        }
    }

    fn push(&mut self, v: &[f64]) {
        self.count += 1.0;
        let delta: Vec<f64> = v.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        for (m, d) in self.mean.iter_mut().zip(&delta) {
            *m += d / self.count;
        }
        let dim = v.len();
        for j in 0..dim {
            let after_j = v[j] - self.mean[j];
            for i in 0..dim {
                self.m2[(i, j)] += delta[i] * after_j;
            }
        }
    }

    fn covariance(&self) -> DMatrix<f64> {
        &self.m2 / (self.count - 1.0).max(1.0)
    }
}

struct Chain<'a> {
    d: &'a Dataset,
    cfg: SamplerConfig,
    rng: ChaCha8Rng,
    xi: Vec<f64>,
    gamma: Vec<f64>,
    log_sigma: f64,
    log_lx: Vec<f64>,
    log_lg: Vec<f64>,
    // (γ, log σ) proposal
    prop_chol: DMatrix<f64>,
    log_scale: f64,
    moments: RunningMoments,
    // local-scale step sizes
    lx_step: Vec<f64>,
    lg_step: Vec<f64>,
    adapting: bool,
    iter: usize,
}

impl<'a> Chain<'a> {
    fn new(d: &'a Dataset, cfg: SamplerConfig, rng: ChaCha8Rng) -> Result<Self> {
        let p = d.p();
        let n = d.n();
        let xtx = d.x.transpose() * &d.x;
        let ridge = &xtx + DMatrix::identity(p, p) * 1e-6;
        let chol = Cholesky::new(ridge)
            .ok_or_else(|| Error::Divergence("ridge initialization failed".into()))?;
        let xty = d.x.transpose() * DVector::from_column_slice(&d.y);
        let xi: Vec<f64> = chol.solve(&xty).iter().copied().collect();
        let fitted = mat_vec(&d.x, &xi);
        let rss: f64 = d.y.iter().zip(&fitted).map(|(y, f)| (y - f).powi(2)).sum();
        let dof = if n > p { n - p } else { n.max(1) };
        let sigma = (rss / dof as f64).sqrt().max(1e-8);

        // Start γ off zero: the local-scale conditionals are improper at an
        // exactly-zero coefficient. log|r_i| = log σ + x_i'γ + log|ε_i| and
        // E log|ε| = -(Euler γ + ln 2) / 2, so regress log|r| on X.
        let floor = sigma * 1e-6;
        let log_abs = DVector::from_iterator(
            n,
            d.y.iter().zip(&fitted).map(|(y, f)| (y - f).abs().max(floor).ln()),
        );
        let mut gamma: Vec<f64> = chol.solve(&(d.x.transpose() * log_abs)).iter().copied().collect();
        let log_sigma = gamma[0] + 0.5 * (EULER_GAMMA + std::f64::consts::LN_2);
        gamma[0] = 0.0;
        let (gamma, log_sigma) = if gamma.iter().chain([&log_sigma]).all(|v| v.is_finite()) {
            (gamma, log_sigma)
        } else {
            (vec![0.0; p], sigma.ln())
        };

        // Fisher information of γ at γ = 0 is 2XᵀX; log σ gets a small
        // independent scale until the empirical covariance takes over.
        let dim = p + 1;
        let mut cov0 = DMatrix::zeros(dim, dim);
        let fisher_inv = Cholesky::new(&xtx * 2.0 + DMatrix::identity(p, p) * 1e-8)
            .ok_or_else(|| Error::Divergence("design Gram matrix not positive definite".into()))?
            .inverse();
        cov0.view_mut((0, 0), (p, p)).copy_from(&fisher_inv);
        cov0[(p, p)] = 1e-3;
        let prop_chol = Cholesky::new(cov0)
            .ok_or_else(|| Error::Divergence("initial proposal not positive definite".into()))?
            .l();

        Ok(Chain {
            d,
            cfg,
            rng,
            xi,
            gamma,
            log_sigma,
            log_lx: vec![0.0; p - 1],
            log_lg: vec![0.0; p - 1],
            prop_chol,
            log_scale: (2.38_f64 * 2.38 / dim as f64).sqrt().ln(),
            moments: RunningMoments::new(dim),
            lx_step: vec![1.0; p - 1],
            lg_step: vec![1.0; p - 1],
            adapting: true,
            iter: 0,
        })
    }

    /// Robbins-Monro gain for the current iteration.
    fn gain(&self) -> f64 {
        1.0 / ((self.iter + 1) as f64).powf(0.6)
    }

    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn draw_xi(&mut self) -> Result<()> {
        let d = self.d;
        let (n, p) = (d.n(), d.p());
        let eta = mat_vec(&d.x, &self.gamma);
        let w: Vec<f64> = eta
            .iter()
            .map(|e| (-2.0 * (self.log_sigma + e)).exp())
            .collect();
        let mut xw = d.x.clone();
        for j in 0..p {
            for i in 0..n {
                xw[(i, j)] *= w[i].sqrt();
            }
        }
        let mut prec = xw.transpose() * &xw;
        for j in 1..p {
            prec[(j, j)] += (-2.0 * self.log_lx[j - 1]).exp();
        }
        let wy = DVector::from_iterator(n, d.y.iter().zip(&w).map(|(y, w)| y * w));
        let b = d.x.transpose() * wy;
        let chol = Cholesky::new(prec).ok_or_else(|| {
            Error::Divergence("ξ full-conditional precision not positive definite".into())
        })?;
        let mean = chol.solve(&b);
        let z = DVector::from_iterator(p, (0..p).map(|_| self.normal()));
        let noise = chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(|| Error::Divergence("singular Cholesky factor".into()))?;
        self.xi = (mean + noise).iter().copied().collect();
        Ok(())
    }

    /// Log conditional density of (γ, log σ) given residuals `r`.
    fn gamma_sigma_logp(&self, gamma: &[f64], log_sigma: f64, r: &[f64]) -> f64 {
        let eta = mat_vec(&self.d.x, gamma);
        let mut lp = 0.0;
        for (e, ri) in eta.iter().zip(r) {
            let ls = log_sigma + e;
            lp += -ls - 0.5 * ri * ri * (-2.0 * ls).exp();
        }
        for j in 1..gamma.len() {
            lp -= 0.5 * gamma[j] * gamma[j] * (-2.0 * self.log_lg[j - 1]).exp();
        }
        // IG on σ² with the log σ Jacobian
        lp += -2.0 * IG_SHAPE * log_sigma - IG_RATE * (-2.0 * log_sigma).exp();
        lp
    }

    fn step_gamma_sigma(&mut self, r: &[f64]) -> bool {
        let p = self.d.p();
        let dim = p + 1;
        let current = self.gamma_sigma_logp(&self.gamma, self.log_sigma, r);
        let z = DVector::from_iterator(dim, (0..dim).map(|_| self.normal()));
        let jump = &self.prop_chol * z * self.log_scale.exp();
        let prop_gamma: Vec<f64> = (0..p).map(|j| self.gamma[j] + jump[j]).collect();
        let prop_ls = self.log_sigma + jump[p];
        let proposed = self.gamma_sigma_logp(&prop_gamma, prop_ls, r);
        let u: f64 = self.rng.random();
        if proposed.is_finite() && u.ln() < proposed - current {
            self.gamma = prop_gamma;
            self.log_sigma = prop_ls;
            true
        } else {
            false
        }
    }

    /// Returns the number of accepted coordinate moves.
    fn step_lambdas(&mut self) -> (usize, usize) {
        let p = self.d.p();
        let mut accepted = 0;
        for j in 1..p {
            for block in 0..2 {
                let (coef, log_l, step) = if block == 0 {
                    (self.xi[j], self.log_lx[j - 1], self.lx_step[j - 1])
                } else {
                    (self.gamma[j], self.log_lg[j - 1], self.lg_step[j - 1])
                };
                let prop = log_l + step * self.normal();
                let logp = |a: f64| {
                    -0.5 * coef * coef * (-2.0 * a).exp()
                        - ((2.0 * a).exp() / (HALF_CAUCHY_SCALE * HALF_CAUCHY_SCALE)).ln_1p()
                };
                let u: f64 = self.rng.random();
                let ok = u.ln() < logp(prop) - logp(log_l);
                if ok {
                    accepted += 1;
                    if block == 0 {
                        self.log_lx[j - 1] = prop;
                    } else {
                        self.log_lg[j - 1] = prop;
                    }
                }
                if self.adapting {
                    let acc = if ok { 1.0 } else { 0.0 };
                    let gain = self.gain();
                    let target = self.cfg.target_accept;
                    let s = if block == 0 {
                        &mut self.lx_step[j - 1]
                    } else {
                        &mut self.lg_step[j - 1]
                    };
                    *s = (s.ln() + gain * (acc - target)).exp().clamp(1e-3, 20.0);
                }
            }
        }
        (accepted, 2 * (p - 1))
    }

    fn residuals(&self) -> Vec<f64> {
        let mean = mat_vec(&self.d.x, &self.xi);
        self.d.y.iter().zip(&mean).map(|(y, m)| y - m).collect()
    }

    fn params(&self) -> LlsParams {
        LlsParams {
            xi: self.xi.clone(),
            gamma: self.gamma.clone(),
            sigma: self.log_sigma.exp(),
            lambda_xi: self.log_lx.iter().map(|v| v.exp()).collect(),
            lambda_gamma: self.log_lg.iter().map(|v| v.exp()).collect(),
        }
    }
}


/// Draw `cfg.n_save` posterior samples after discarding `cfg.n_burn`.
pub fn sample_posterior(d: &Dataset, cfg: &SamplerConfig, seed: u64) -> Result<PosteriorDraws> {
    sample_posterior_with_rng(d, cfg, rng::stream(seed, 0, Purpose::Sampler))
}

pub fn sample_posterior_with_rng(
    d: &Dataset,
    cfg: &SamplerConfig,
    rng: ChaCha8Rng,
) -> Result<PosteriorDraws> {
    if cfg.n_save == 0 {
        return Err(Error::InvalidArgument("n_save must be positive".into()));
    }
    if d.p() == 0 || d.n() <= d.p() {
        return Err(Error::TooFewRows { n: d.n(), p: d.p() });
    }
    if !(cfg.target_accept > 0.0 && cfg.target_accept < 1.0) {
        return Err(Error::InvalidArgument("target acceptance must lie in (0, 1)".into()));
    }
    let mut chain = Chain::new(d, *cfg, rng)?;
    let p = d.p();
    let adapt_start = 100;
    let adapt_every = 50;
    let mut draws = Vec::with_capacity(cfg.n_save);
    let (mut gs_acc, mut gs_tot, mut lam_acc, mut lam_tot) = (0usize, 0usize, 0usize, 0usize);

    for it in 0..cfg.n_burn + cfg.n_save {
        let burn = it < cfg.n_burn;
        chain.adapting = burn;
        chain.iter = it;
        chain.draw_xi()?;

        let r = chain.residuals();
        for _ in 0..cfg.gamma_steps.max(1) {
            let ok = chain.step_gamma_sigma(&r);
            if burn {
                let gain = chain.gain();
                chain.log_scale += gain * (f64::from(u8::from(ok)) - cfg.target_accept);
            } else {
                gs_tot += 1;
                gs_acc += usize::from(ok);
            }
        }
        if burn && it >= adapt_start / 2 {
            let mut v = chain.gamma.clone();
            v.push(chain.log_sigma);
            chain.moments.push(&v);
            if it >= adapt_start && it % adapt_every == 0 {
                let dim = p + 1;
                let cov = chain.moments.covariance() + DMatrix::identity(dim, dim) * 1e-10;
                if let Some(c) = Cholesky::new(cov) {
                    chain.prop_chol = c.l();
                    chain.log_scale = (2.38_f64 * 2.38 / dim as f64).sqrt().ln();
                }
            }
        }
        // local scales stay at their start for a short warm-up
        let lambda_steps = if it < cfg.n_burn / 10 { 0 } else { cfg.lambda_steps.max(1) };
        for _ in 0..lambda_steps {
            let (a, t) = chain.step_lambdas();
            if !burn {
                lam_acc += a;
                lam_tot += t;
            }
        }

        if !burn {
            let theta = chain.params();
            let lt = log_target(&theta, d)?;
            if !lt.is_finite() {
                return Err(Error::Divergence(format!(
                    "non-finite log target at iteration {it} (sigma = {}, max |gamma| = {})",
                    theta.sigma,
                    theta.gamma.iter().fold(0.0_f64, |m, g| m.max(g.abs()))
                )));
            }
            draws.push(theta);
        }
    }
    let rate = |a: usize, t: usize| if t == 0 { 0.0 } else { a as f64 / t as f64 };
    Ok(PosteriorDraws {
        p,
        draws,
        burn_in_discarded: cfg.n_burn,
        acceptance_rates: BlockRates {
            xi: 1.0,
            gamma_sigma: rate(gs_acc, gs_tot),
            lambda: rate(lam_acc, lam_tot),
        },
    })
}

/// `q[m][i] = x_i'ξᵐ + σᵐ exp(x_i'γᵐ) Φ⁻¹(tau)` for every draw and row of `x`.
pub fn quantile_draws(pd: &PosteriorDraws, x: &DMatrix<f64>, tau: f64) -> Result<QuantileDraws> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile level must lie in (0, 1), got {tau}"
        )));
    }
    if x.ncols() != pd.p {
        return Err(Error::Dimension(format!(
            "design has {} columns, draws have {}",
            x.ncols(),
            pd.p
        )));
    }
    if pd.draws.is_empty() {
        return Err(Error::InvalidArgument("no posterior draws".into()));
    }
    let z = quantile_unchecked(tau);
    let n = x.nrows();
    let mut values = Vec::with_capacity(pd.len() * n);
    for draw in &pd.draws {
        let mean = mat_vec(x, &draw.xi);
        if z == 0.0 {
            values.extend_from_slice(&mean);
            continue;
        }
        let eta = mat_vec(x, &draw.gamma);
        values.extend(
            mean.iter()
                .zip(&eta)
                .map(|(m, e)| m + draw.sigma * e.exp() * z),
        );
    }
    QuantileDraws::new(tau, pd.len(), n, values)
}

/// Posterior mean of the conditional quantile at each row.
pub fn fitted_quantiles(qd: &QuantileDraws) -> Vec<f64> {
    let mut out = vec![0.0; qd.n];
    for row in qd.rows() {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    let m = qd.m as f64;
    out.iter_mut().for_each(|v| *v /= m);
    out
}

/// Write draws as CSV: `xi_1..xi_p, gamma_1..gamma_p, sigma`, followed by
/// `lambda_xi_2..`, `lambda_gamma_2..`.
pub fn write_draws_csv(pd: &PosteriorDraws, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(draws_header(pd.p))?;
    let mut row: Vec<String> = Vec::new();
    for d in &pd.draws {
        row.clear();
        row.extend(d.xi.iter().map(|v| v.to_string()));
        row.extend(d.gamma.iter().map(|v| v.to_string()));
        row.push(d.sigma.to_string());
        row.extend(d.lambda_xi.iter().map(|v| v.to_string()));
        row.extend(d.lambda_gamma.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn draws_header(p: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=p).map(|j| format!("xi_{j}")).collect();
    h.extend((1..=p).map(|j| format!("gamma_{j}")));
    h.push("sigma".into());
    h.extend((2..=p).map(|j| format!("lambda_xi_{j}")));
    h.extend((2..=p).map(|j| format!("lambda_gamma_{j}")));
    h
}

/// Read draws written by [`write_draws_csv`] or by an external sampler. Local
/// scale columns are optional; when absent every scale is recorded as 1.
pub fn read_draws_csv(path: impl AsRef<Path>) -> Result<PosteriorDraws> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    let headers: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let p = headers.iter().filter(|h| h.starts_with("xi_")).count();
    if p == 0 {
        return Err(Error::MissingColumn("xi_1".into()));
    }
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let xi_idx: Vec<usize> = (1..=p).map(|j| find(&format!("xi_{j}"))).collect::<Result<_>>()?;
    let g_idx: Vec<usize> = (1..=p)
        .map(|j| find(&format!("gamma_{j}")))
        .collect::<Result<_>>()?;
    let s_idx = find("sigma")?;
    let lx_idx: Option<Vec<usize>> = (2..=p)
        .map(|j| find(&format!("lambda_xi_{j}")).ok())
        .collect();
    let lg_idx: Option<Vec<usize>> = (2..=p)
        .map(|j| find(&format!("lambda_gamma_{j}")).ok())
        .collect();
    let mut draws = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| -> Result<f64> {
            let s = rec.get(i).unwrap_or("").trim();
            s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::NonNumeric {
                column: headers[i].clone(),
                row: row + 1,
                value: s.to_string(),
            })
        };
        let theta = LlsParams {
            xi: xi_idx.iter().map(|&i| get(i)).collect::<Result<_>>()?,
            gamma: g_idx.iter().map(|&i| get(i)).collect::<Result<_>>()?,
            sigma: get(s_idx)?,
            lambda_xi: match &lx_idx {
                Some(ix) => ix.iter().map(|&i| get(i)).collect::<Result<_>>()?,
                None => vec![1.0; p - 1],
            },
            lambda_gamma: match &lg_idx {
                Some(ix) => ix.iter().map(|&i| get(i)).collect::<Result<_>>()?,
                None => vec![1.0; p - 1],
            },
        };
        theta.validate(p)?;
        draws.push(theta);
    }
    if draws.is_empty() {
        return Err(Error::InvalidArgument("draws file has no rows".into()));
    }
    Ok(PosteriorDraws {
        p,
        draws,
        burn_in_discarded: 0,
        acceptance_rates: BlockRates::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnKind, ColumnScaling, Standardization};
    use rand::SeedableRng;

    fn raw_dataset(x: DMatrix<f64>, y: Vec<f64>) -> Dataset {
        let p = x.ncols();
        Dataset {
            response_name: "y".into(),
            y,
            column_names: (1..=p).map(|j| format!("c{j}")).collect(),
            raw: x.clone(),
            x,
            standardization: Standardization {
                columns: vec![
                    ColumnScaling {
                        kind: ColumnKind::Raw,
                        mean: 0.0,
                        scale: 1.0
                    };
                    p
                ],
            },
        }
    }

    fn hetero_data(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = DMatrix::zeros(n, 3);
        let mut y = vec![0.0; n];
        for i in 0..n {
            x[(i, 0)] = 1.0;
            x[(i, 1)] = rng.sample::<f64, _>(StandardNormal) * 0.5;
            x[(i, 2)] = rng.sample::<f64, _>(StandardNormal) * 0.5;
            let e: f64 = rng.sample(StandardNormal);
            y[i] = 1.0 + 2.0 * x[(i, 1)] + 0.5 * (0.6 * x[(i, 2)]).exp() * e;
        }
        raw_dataset(x, y)
    }

    #[test]
    fn log_posterior_single_observation() {
        let d = raw_dataset(DMatrix::from_element(1, 1, 1.0), vec![0.0]);
        let theta = LlsParams {
            xi: vec![0.0],
            gamma: vec![0.0],
            sigma: 1.0,
            lambda_xi: vec![],
            lambda_gamma: vec![],
        };
        let ll = -0.5 * (2.0 * PI).ln();
        let prior = 0.5 * 0.5_f64.ln() - 0.5 * PI.ln() - 0.5;
        let got = log_posterior(&theta, &d).unwrap();
        assert!((got - (ll + prior)).abs() < 1e-12, "{got}");
    }

    #[test]
    fn log_posterior_rejects_bad_sigma() {
        let d = raw_dataset(DMatrix::from_element(1, 1, 1.0), vec![0.0]);
        let theta = LlsParams {
            xi: vec![0.0],
            gamma: vec![0.0],
            sigma: 0.0,
            lambda_xi: vec![],
            lambda_gamma: vec![],
        };
        assert!(log_posterior(&theta, &d).is_err());
    }

    fn perturb(theta: &LlsParams, k: usize, h: f64) -> LlsParams {
        let p = theta.p();
        let mut t = theta.clone();
        if k < p {
            t.xi[k] += h;
        } else if k < 2 * p {
            t.gamma[k - p] += h;
        } else if k == 2 * p {
            t.sigma *= h.exp();
        } else if k < 3 * p {
            t.lambda_xi[k - 2 * p - 1] *= h.exp();
        } else {
            t.lambda_gamma[k - 3 * p] *= h.exp();
        }
        t
    }

    #[test]
    fn gradient_matches_central_differences() {
        let d = hetero_data(40, 3);
        let theta = LlsParams {
            xi: vec![0.8, 1.7, -0.2],
            gamma: vec![0.1, -0.3, 0.4],
            sigma: 0.7,
            lambda_xi: vec![1.3, 0.4],
            lambda_gamma: vec![0.9, 2.2],
        };
        let g = log_target_gradient(&theta, &d).unwrap();
        let mut flat = g.xi.clone();
        flat.extend(&g.gamma);
        flat.push(g.log_sigma);
        flat.extend(&g.log_lambda_xi);
        flat.extend(&g.log_lambda_gamma);
        let h = 1e-5;
        for (k, gk) in flat.iter().enumerate() {
            let up = log_target(&perturb(&theta, k, h), &d).unwrap();
            let dn = log_target(&perturb(&theta, k, -h), &d).unwrap();
            let fd = (up - dn) / (2.0 * h);
            assert!((fd - gk).abs() <= 1e-5 * (1.0 + gk.abs()), "k={k}: {fd} vs {gk}");
        }
    }

    #[test]
    fn median_quantile_is_location() {
        let pd = PosteriorDraws {
            p: 2,
            draws: vec![LlsParams {
                xi: vec![1.0, 2.0],
                gamma: vec![0.5, 0.5],
                sigma: 3.0,
                lambda_xi: vec![1.0],
                lambda_gamma: vec![1.0],
            }],
            burn_in_discarded: 0,
            acceptance_rates: BlockRates::default(),
        };
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let q = quantile_draws(&pd, &x, 0.5).unwrap();
        assert_eq!(q.values, vec![1.0, 3.0]);
        let q = quantile_draws(&pd, &x, 0.975).unwrap();
        let z = 1.959_963_984_540_054;
        assert!((q.values[0] - (1.0 + 3.0 * 0.5_f64.exp() * z)).abs() < 1e-12);
        assert!(quantile_draws(&pd, &x, 1.0).is_err());
    }

    #[test]
    fn fitted_quantiles_average_rows() {
        let q = QuantileDraws::new(0.5, 2, 3, vec![1.0, 2.0, 3.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(fitted_quantiles(&q), vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn sampler_is_deterministic_and_recovers_location() {
        let d = hetero_data(300, 11);
        let cfg = SamplerConfig {
            n_save: 600,
            n_burn: 600,
            ..SamplerConfig::default()
        };
        let a = sample_posterior(&d, &cfg, 5).unwrap();
        let b = sample_posterior(&d, &cfg, 5).unwrap();
        assert_eq!(a.draws, b.draws);
        assert_eq!(a.len(), 600);
        let xi = a.mean_xi();
        assert!((xi[0] - 1.0).abs() < 0.15, "{xi:?}");
        assert!((xi[1] - 2.0).abs() < 0.3, "{xi:?}");
        let g = a.mean_gamma();
        assert!((g[2] - 0.6).abs() < 0.35, "{g:?}");
        let r = a.acceptance_rates;
        assert!(r.gamma_sigma > 0.1 && r.gamma_sigma < 0.6, "{r:?}");
        assert!(r.lambda > 0.1 && r.lambda < 0.7, "{r:?}");
    }

    #[test]
    fn draws_csv_round_trip() {
        let d = hetero_data(60, 2);
        let cfg = SamplerConfig {
            n_save: 20,
            n_burn: 20,
            ..SamplerConfig::default()
        };
        let pd = sample_posterior(&d, &cfg, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("draws.csv");
        write_draws_csv(&pd, &path).unwrap();
        let back = read_draws_csv(&path).unwrap();
        assert_eq!(back.draws, pd.draws);
    }
}
