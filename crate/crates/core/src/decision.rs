//! Quantile-focused squared-error decision analysis.
//!
//! For a subset `S` of design columns, the optimal linear action at level τ is
//! the least-squares projection of the posterior-mean quantiles `q̂` onto
//! `X_S`; the posterior action projects each quantile draw instead. Losses are
//! reported per draw and averaged over draws.

use crate::error::{Error, Result};
use crate::linalg::Qr;
use crate::model::{fitted_quantiles, QuantileDraws};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

/// Relative size below which a loss difference is indistinguishable from
/// rounding noise and is reported as exactly zero.
const ZERO_DIFF_TOL: f64 = 1e-10;

/// Sorted, duplicate-free set of design column indices.
///
/// Indices are 0-based in memory (column 0 is the intercept). Text I/O uses
/// 1-based indices, so the intercept prints as `1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SubsetMask {
    indices: Vec<usize>,
}

impl SubsetMask {
    /// Builds a mask from 0-based indices, sorting and rejecting duplicates.
    pub fn new(mut indices: Vec<usize>) -> Result<SubsetMask> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!(
                "duplicate index in subset {:?}",
                indices.iter().map(|i| i + 1).collect::<Vec<_>>()
            )));
        }
        Ok(SubsetMask { indices })
    }

    /// Builds a mask from 1-based indices, checking them against `p`.
    pub fn from_one_based(indices: &[usize], p: usize) -> Result<SubsetMask> {
        if let Some(&bad) = indices.iter().find(|&&j| j == 0 || j > p) {
            return Err(Error::InvalidArgument(format!(
                "subset index {bad} outside 1..={p}"
            )));
        }
        SubsetMask::new(indices.iter().map(|j| j - 1).collect())
    }

    /// Parses a comma- or semicolon-separated list of 1-based indices.
    pub fn parse_one_based(text: &str, p: usize) -> Result<SubsetMask> {
        let idx = text
            .split([',', ';'])
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad subset index `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        SubsetMask::from_one_based(&idx, p)
    }

    pub fn full(p: usize) -> SubsetMask {
        SubsetMask {
            indices: (0..p).collect(),
        }
    }

    pub fn intercept() -> SubsetMask {
        SubsetMask { indices: vec![0] }
    }

    pub fn empty() -> SubsetMask {
        SubsetMask { indices: vec![] }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn is_subset_of(&self, other: &SubsetMask) -> bool {
        self.indices.iter().all(|&j| other.contains(j))
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices.last().copied()
    }

    pub fn union(&self, other: &SubsetMask) -> SubsetMask {
        let mut v: Vec<usize> = self.indices.iter().chain(&other.indices).copied().collect();
        v.sort_unstable();
        v.dedup();
        SubsetMask { indices: v }
    }

    fn check_within(&self, p: usize) -> Result<()> {
        match self.max_index() {
            Some(j) if j >= p => Err(Error::Dimension(format!(
                "subset index {} exceeds {p} design columns",
                j + 1
            ))),
            _ => Ok(()),
        }
    }
}

impl TryFrom<Vec<usize>> for SubsetMask {
    type Error = Error;

    /// Interprets the vector as 1-based indices.
    fn try_from(v: Vec<usize>) -> Result<SubsetMask> {
        SubsetMask::from_one_based(&v, usize::MAX)
    }
}

impl From<SubsetMask> for Vec<usize> {
    fn from(s: SubsetMask) -> Vec<usize> {
        s.to_one_based()
    }
}

/// Prints 1-based indices joined by `;`.
impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(|i| (i + 1).to_string()).collect();
        f.write_str(&parts.join(";"))
    }
}

/// Thin QR of `X_S`, shared by every projection onto that subset.
#[derive(Debug, Clone)]
pub struct SubsetProjector {
    subset: SubsetMask,
    qr: Qr,
    p: usize,
}

impl SubsetProjector {
    pub fn new(x: &DMatrix<f64>, subset: &SubsetMask) -> Result<SubsetProjector> {
        subset.check_within(x.ncols())?;
        if subset.is_empty() {
            return Err(Error::InvalidArgument("cannot project onto an empty subset".into()));
        }
        if subset.len() > x.nrows() {
            return Err(Error::TooFewRows {
                n: x.nrows(),
                p: subset.len(),
            });
        }
        let qr = Qr::from_columns(x, subset.indices());
        let bad = qr.deficient_columns();
        if !bad.is_empty() {
            return Err(Error::RankDeficient(
                bad.iter()
                    .map(|&pos| format!("column {}", subset.indices()[pos] + 1))
                    .collect(),
            ));
        }
        Ok(SubsetProjector {
            subset: subset.clone(),
            qr,
            p: x.ncols(),
        })
    }

    pub fn subset(&self) -> &SubsetMask {
        &self.subset
    }

    /// Coefficients on `S` and residual sum of squares for response `b`.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, f64)> {
        if b.len() != self.qr.nrows() {
            return Err(Error::Dimension(format!(
                "response of length {} for {} design rows",
                b.len(),
                self.qr.nrows()
            )));
        }
        Ok(self.qr.least_squares(b))
    }

    /// Scatter subset coefficients into a length-`p` vector.
    pub fn expand(&self, coef: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.p];
        for (&j, c) in self.subset.indices().iter().zip(coef) {
            out[j] = *c;
        }
        out
    }

    /// `(X_SᵀX_S)⁻¹X_Sᵀ` as a `|S| x n` matrix.
    fn pseudo_inverse(&self) -> DMatrix<f64> {
        let n = self.qr.nrows();
        let k = self.subset.len();
        let mut out = DMatrix::zeros(k, n);
        let mut e = vec![0.0; n];
        for i in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[i] = 1.0;
            self.qr.apply_qt(&mut e);
            let c = self.qr.solve_r(&e);
            out.column_mut(i).copy_from_slice(&c);
        }
        out
    }
}

/// Thread-safe cache of subset factorizations over one design.
#[derive(Debug)]
pub struct ProjectorCache<'a> {
    x: &'a DMatrix<f64>,
    map: RwLock<HashMap<SubsetMask, Arc<SubsetProjector>>>,
}

impl<'a> ProjectorCache<'a> {
    pub fn new(x: &'a DMatrix<f64>) -> Self {
        ProjectorCache {
            x,
            map: RwLock::new(HashMap::new()),
        }
    }

    pub fn design(&self) -> &DMatrix<f64> {
        self.x
    }

    pub fn get(&self, subset: &SubsetMask) -> Result<Arc<SubsetProjector>> {
        if let Some(p) = self.map.read().expect("cache lock").get(subset) {
            return Ok(Arc::clone(p));
        }
        let proj = Arc::new(SubsetProjector::new(self.x, subset)?);
        let mut map = self.map.write().expect("cache lock");
        Ok(Arc::clone(map.entry(subset.clone()).or_insert(proj)))
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Point estimate of the linear quantile coefficients restricted to a subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalAction {
    pub tau: f64,
    pub subset: SubsetMask,
    /// Length `p`, zero off the subset.
    pub delta: Vec<f64>,
    /// `Σ_i (q̂_i − x_i'δ)²`.
    pub rss: f64,
    /// Expected loss. Equal to `rss` (the loss up to a subset-free constant)
    /// unless filled in from the draws with [`expected_loss`].
    pub expected_loss: f64,
}

impl OptimalAction {
    pub fn predictions(&self, x: &DMatrix<f64>) -> Vec<f64> {
        predict(x, &self.delta)
    }
}

/// Per-draw coefficients of the projection onto a subset.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorAction {
    pub tau: f64,
    pub subset: SubsetMask,
    /// `M x |S|`.
    pub draws: DMatrix<f64>,
}

impl PosteriorAction {
    pub fn mean(&self) -> Vec<f64> {
        let m = self.draws.nrows() as f64;
        (0..self.draws.ncols())
            .map(|j| self.draws.column(j).iter().sum::<f64>() / m)
            .collect()
    }
}

fn predict(x: &DMatrix<f64>, delta: &[f64]) -> Vec<f64> {
    let n = x.nrows();
    let data = x.as_slice();
    let mut out = vec![0.0; n];
    for (j, &d) in delta.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(&data[j * n..(j + 1) * n]) {
            *o += v * d;
        }
    }
    out
}

/// Least-squares fit of `qhat` on the columns in `s`.
pub fn optimal_action(
    qhat: &[f64],
    x: &DMatrix<f64>,
    s: &SubsetMask,
    tau: f64,
) -> Result<OptimalAction> {
    let proj = SubsetProjector::new(x, s)?;
    optimal_action_with(&proj, qhat, tau)
}

/// [`optimal_action`] with a prebuilt factorization.
pub fn optimal_action_with(
    proj: &SubsetProjector,
    qhat: &[f64],
    tau: f64,
) -> Result<OptimalAction> {
    let (coef, rss) = proj.solve(qhat)?;
    Ok(OptimalAction {
        tau,
        subset: proj.subset().clone(),
        delta: proj.expand(&coef),
        rss,
        expected_loss: rss,
    })
}

/// Projection of every quantile draw onto `X_S`.
pub fn posterior_action(
    qd: &QuantileDraws,
    x: &DMatrix<f64>,
    s: &SubsetMask,
) -> Result<PosteriorAction> {
    let proj = SubsetProjector::new(x, s)?;
    posterior_action_with(&proj, qd)
}

pub fn posterior_action_with(proj: &SubsetProjector, qd: &QuantileDraws) -> Result<PosteriorAction> {
    if qd.n != proj.qr.nrows() {
        return Err(Error::Dimension(format!(
            "quantile draws have {} rows, design has {}",
            qd.n,
            proj.qr.nrows()
        )));
    }
    let h = proj.pseudo_inverse();
    // values are row-major M x n, i.e. column-major n x M
    let q = DMatrix::from_column_slice(qd.n, qd.m, &qd.values);
    let coef = h * q;
    Ok(PosteriorAction {
        tau: qd.tau,
        subset: proj.subset().clone(),
        draws: coef.transpose(),
    })
}

/// Type-7 (linearly interpolated) empirical quantile of sorted data.
pub fn quantile_type7(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty sample");
    let h = (n - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tailed credible interval for each coefficient of the posterior action.
pub fn credible_interval(pa: &PosteriorAction, level: f64) -> Result<Vec<(f64, f64)>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "credible level must lie in (0, 1), got {level}"
        )));
    }
    if pa.draws.nrows() == 0 {
        return Err(Error::InvalidArgument("no draws".into()));
    }
    let lo_p = (1.0 - level) / 2.0;
    let hi_p = 1.0 - lo_p;
    Ok((0..pa.draws.ncols())
        .map(|j| {
            let mut v: Vec<f64> = pa.draws.column(j).iter().copied().collect();
            v.sort_by(f64::total_cmp);
            (quantile_type7(&v, lo_p), quantile_type7(&v, hi_p))
        })
        .collect())
}

/// `Σ_i (qhat_i − x_i'δ)²`.
pub fn rss(qhat: &[f64], x: &DMatrix<f64>, action: &OptimalAction) -> Result<f64> {
    check_action(x, action)?;
    if qhat.len() != x.nrows() {
        return Err(Error::Dimension("qhat length differs from design rows".into()));
    }
    Ok(predict(x, &action.delta)
        .iter()
        .zip(qhat)
        .map(|(a, b)| (b - a).powi(2))
        .sum())
}

fn check_action(x: &DMatrix<f64>, action: &OptimalAction) -> Result<()> {
    if action.delta.len() != x.ncols() {
        return Err(Error::Dimension(format!(
            "action has {} coefficients, design has {} columns",
            action.delta.len(),
            x.ncols()
        )));
    }
    Ok(())
}

/// Mean over draws of `Σ_i (q[m][i] − x_i'δ)²`, summed directly.
pub fn expected_loss(qd: &QuantileDraws, x: &DMatrix<f64>, action: &OptimalAction) -> Result<f64> {
    check_action(x, action)?;
    if qd.n != x.nrows() {
        return Err(Error::Dimension("quantile draws and design disagree on n".into()));
    }
    let pred = predict(x, &action.delta);
    let total: f64 = qd
        .rows()
        .map(|row| row.iter().zip(&pred).map(|(q, f)| (q - f).powi(2)).sum::<f64>())
        .sum();
    Ok(total / qd.m as f64)
}

/// Percent increase in per-draw loss of `action` over the fitted quantiles.
pub fn d_s_draws(qd: &QuantileDraws, x: &DMatrix<f64>, action: &OptimalAction) -> Result<Vec<f64>> {
    DrawLosses::new(qd, x)?.d_s(action)
}

/// Per-draw quantities that make loss comparisons `O(M |S|)` per subset.
///
/// With `e_m = q_m − q̂` and `ŷ = Xδ`,
/// `L_S(θ^m) − L_Q̂(θ^m) = ‖q̂ − ŷ‖² + 2 e_m·(q̂ − ŷ)`, and `e_m·ŷ = (Xᵀe_m)·δ`.
#[derive(Debug, Clone)]
pub struct DrawLosses {
    pub qhat: Vec<f64>,
    /// `L_Q̂(θ^m) = ‖e_m‖²`.
    pub anchor: Vec<f64>,
    /// `Xᵀe_m`, stored `p x M`.
    xte: DMatrix<f64>,
    /// `e_m·q̂`.
    eq: Vec<f64>,
    qhat_norm: f64,
}

impl DrawLosses {
    pub fn new(qd: &QuantileDraws, x: &DMatrix<f64>) -> Result<DrawLosses> {
        if qd.n != x.nrows() {
            return Err(Error::Dimension(format!(
                "quantile draws have {} rows, design has {}",
                qd.n,
                x.nrows()
            )));
        }
        let qhat = fitted_quantiles(qd);
        let mut e = DMatrix::from_column_slice(qd.n, qd.m, &qd.values);
        for mut col in e.column_iter_mut() {
            for (v, q) in col.iter_mut().zip(&qhat) {
                *v -= q;
            }
        }
        let anchor: Vec<f64> = e.column_iter().map(|c| c.norm_squared()).collect();
        let eq: Vec<f64> = e
            .column_iter()
            .map(|c| c.iter().zip(&qhat).map(|(a, b)| a * b).sum())
            .collect();
        let xte = x.transpose() * &e;
        let qhat_norm = qhat.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(DrawLosses {
            qhat,
            anchor,
            xte,
            eq,
            qhat_norm,
        })
    }

    pub fn m(&self) -> usize {
        self.anchor.len()
    }

    /// Mean of the anchor losses.
    pub fn mean_anchor(&self) -> f64 {
        self.anchor.iter().sum::<f64>() / self.m() as f64
    }

    /// Expected loss of an action, `mean_m L_Q̂(θ^m) + ‖q̂ − ŷ‖²`.
    pub fn expected_loss(&self, action: &OptimalAction) -> f64 {
        self.mean_anchor() + action.rss
    }

    /// `D_S(θ^m)` in percent for every draw.
    pub fn d_s(&self, action: &OptimalAction) -> Result<Vec<f64>> {
        if action.delta.len() != self.xte.nrows() {
            return Err(Error::Dimension("action length differs from design".into()));
        }
        if let Some(draw) = self.anchor.iter().position(|&a| a == 0.0) {
            return Err(Error::ZeroAnchorLoss { draw });
        }
        let support: Vec<(usize, f64)> = action
            .delta
            .iter()
            .enumerate()
            .filter(|(_, d)| **d != 0.0)
            .map(|(j, d)| (j, *d))
            .collect();
        // ‖q̂‖ + ‖ŷ‖, with ‖ŷ‖ ≤ ‖q̂‖ + √rss; rounding in the two dot
        // products is bounded by a small multiple of ‖e_m‖ times this.
        let pred_norm = 2.0 * self.qhat_norm + action.rss.sqrt();
        let mut out = Vec::with_capacity(self.m());
        for m in 0..self.m() {
            let col = self.xte.column(m);
            let e_yhat: f64 = support.iter().map(|&(j, d)| col[j] * d).sum();
            let diff = action.rss + 2.0 * (self.eq[m] - e_yhat);
            let scale = self.anchor[m].sqrt() * pred_norm;
            let d = if diff.abs() <= ZERO_DIFF_TOL * scale {
                0.0
            } else {
                (100.0 * diff / self.anchor[m]).max(-100.0)
            };
            out.push(d);
        }
        Ok(out)
    }
}
