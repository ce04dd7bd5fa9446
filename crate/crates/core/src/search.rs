//! Best-subset search over the columns of a design for a fixed response
//! (the fitted quantiles at one level).
//!
//! [`branch_and_bound`] walks a Furnival–Wilson style deletion tree: every
//! node is a subset, and its children delete one further column. RSS can only
//! grow along a branch, so a node whose RSS already exceeds the retention
//! threshold of every size reachable below it is not expanded.
//! [`exhaustive_search`] enumerates every subset and serves as the oracle.

use crate::decision::SubsetMask;
use crate::error::{Error, Result};
use crate::linalg::{Qr, TriangularFactor};
use crate::model::PosteriorDraws;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::io::Write;
use std::path::Path;

/// Default number of subsets retained per size.
pub const DEFAULT_M_K: usize = 50;
/// Largest search space handled without prescreening.
pub const DEFAULT_MAX_P: usize = 35;
/// Largest search space the exhaustive oracle will enumerate.
pub const DEFAULT_EXHAUSTIVE_MAX_P: usize = 20;

/// RSS values within this relative distance count as tied.
const TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub subset: SubsetMask,
    pub rss: f64,
}

/// Retained subsets, ordered by size, then RSS, then index list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub tau: f64,
    pub m_k: usize,
    pub always_include: SubsetMask,
    pub subsets: Vec<Candidate>,
}

impl CandidateSet {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.subsets.iter().map(|c| c.subset.len()).collect();
        s.dedup();
        s
    }

    pub fn of_size(&self, k: usize) -> impl Iterator<Item = &Candidate> {
        self.subsets.iter().filter(move |c| c.subset.len() == k)
    }

    pub fn rss_by_size(&self, k: usize) -> Vec<f64> {
        self.of_size(k).map(|c| c.rss).collect()
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// CSV with columns `tau,size,rank,rss,indices`; indices are 1-based and
    /// `;`-joined.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau", "size", "rank", "rss", "indices"])?;
        let mut rank = 0;
        let mut last = 0;
        for c in &self.subsets {
            if c.subset.len() != last {
                last = c.subset.len();
                rank = 0;
            }
            rank += 1;
            w.write_record([
                self.tau.to_string(),
                last.to_string(),
                rank.to_string(),
                c.rss.to_string(),
                c.subset.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RssEngine {
    /// Column deletion by Givens rotations on a shared triangular factor.
    Givens,
    /// Re-factor every subset from the design.
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub tau: f64,
    pub m_k: usize,
    pub always_include: SubsetMask,
    /// Columns the search may use; all columns when `None`.
    pub universe: Option<SubsetMask>,
    pub engine: RssEngine,
    pub parallel: bool,
    pub max_p: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            tau: 0.5,
            m_k: DEFAULT_M_K,
            always_include: SubsetMask::intercept(),
            universe: None,
            engine: RssEngine::Givens,
            parallel: false,
            max_p: DEFAULT_MAX_P,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Subsets whose RSS was evaluated.
    pub nodes: u64,
}

fn cmp_entry(a: &Candidate, b: &Candidate) -> Ordering {
    a.rss
        .total_cmp(&b.rss)
        .then_with(|| a.subset.indices().cmp(b.subset.indices()))
}

fn tied(rss: f64, threshold: f64) -> bool {
    rss <= threshold + TIE_TOL * threshold.abs()
}

/// Best `m_k` subsets of each size, plus any tied with the `m_k`-th.
#[derive(Debug, Clone)]
struct Retention {
    m_k: usize,
    lists: Vec<Vec<Candidate>>,
}

impl Retention {
    fn new(m_k: usize, max_size: usize) -> Self {
        Retention {
            m_k,
            lists: vec![Vec::new(); max_size + 1],
        }
    }

    /// RSS a new size-`k` subset must not exceed to be kept.
    fn threshold(&self, k: usize) -> f64 {
        let list = &self.lists[k];
        if list.len() < self.m_k {
            f64::INFINITY
        } else {
            list[self.m_k - 1].rss
        }
    }

    fn offer(&mut self, cand: Candidate) {
        let k = cand.subset.len();
        if !tied(cand.rss, self.threshold(k)) {
            return;
        }
        let list = &mut self.lists[k];
        let pos = list
            .binary_search_by(|c| cmp_entry(c, &cand))
            .unwrap_or_else(|e| e);
        list.insert(pos, cand);
        self.trim(k);
    }

    fn trim(&mut self, k: usize) {
        let m_k = self.m_k;
        let list = &mut self.lists[k];
        if list.len() <= m_k {
            return;
        }
        let thr = list[m_k - 1].rss;
        let keep = m_k + list[m_k..].iter().take_while(|c| tied(c.rss, thr)).count();
        list.truncate(keep);
    }

    fn merge(&mut self, other: Retention) {
        for (k, list) in other.lists.into_iter().enumerate() {
            for c in list {
                if !self.lists[k].iter().any(|e| e.subset == c.subset) {
                    self.offer(c);
                }
            }
        }
    }

    fn into_set(self, tau: f64, always_include: SubsetMask) -> CandidateSet {
        let m_k = self.m_k;
        let mut subsets = Vec::new();
        for mut list in self.lists {
            order_ties(&mut list);
            subsets.extend(list);
        }
        CandidateSet {
            tau,
            m_k,
            always_include,
            subsets,
        }
    }
}

/// Within runs of tied RSS (relative to the run's first entry), order by
/// index list so rounding differences cannot reorder equivalent subsets.
fn order_ties(list: &mut [Candidate]) {
    let mut start = 0;
    while start < list.len() {
        let anchor = list[start].rss;
        let end = start
            + list[start..]
                .iter()
                .take_while(|c| tied(c.rss, anchor))
                .count();
        list[start..end].sort_by(|a, b| a.subset.indices().cmp(b.subset.indices()));
        start = end;
    }
}

struct Problem<'a> {
    x: &'a DMatrix<f64>,
    qhat: &'a [f64],
    universe: Vec<usize>,
    always: SubsetMask,
}

fn setup<'a>(
    qhat: &'a [f64],
    x: &'a DMatrix<f64>,
    opts: &SearchOptions,
) -> Result<Problem<'a>> {
    if qhat.len() != x.nrows() {
        return Err(Error::Dimension(format!(
            "response of length {} for {} design rows",
            qhat.len(),
            x.nrows()
        )));
    }
    if opts.m_k == 0 {
        return Err(Error::InvalidArgument("m_k must be positive".into()));
    }
    let p = x.ncols();
    let universe = match &opts.universe {
        Some(u) => {
            if u.max_index().is_some_and(|j| j >= p) {
                return Err(Error::Dimension("search universe exceeds design".into()));
            }
            u.union(&opts.always_include)
        }
        None => SubsetMask::full(p),
    };
    if opts.always_include.max_index().is_some_and(|j| j >= p) {
        return Err(Error::Dimension("forced column exceeds design".into()));
    }
    if universe.len() > opts.max_p {
        return Err(Error::SearchLimit {
            p: universe.len(),
            limit: opts.max_p,
        });
    }
    if universe.len() > x.nrows() {
        return Err(Error::TooFewRows {
            n: x.nrows(),
            p: universe.len(),
        });
    }
    let qr = Qr::from_columns(x, universe.indices());
    let bad = qr.deficient_columns();
    if !bad.is_empty() {
        return Err(Error::RankDeficient(
            bad.iter()
                .map(|&pos| format!("column {}", universe.indices()[pos] + 1))
                .collect(),
        ));
    }
    Ok(Problem {
        x,
        qhat,
        universe: universe.indices().to_vec(),
        always: opts.always_include.clone(),
    })
}

/// Exact best subsets per size by complete enumeration.
pub fn exhaustive_search(
    qhat: &[f64],
    x: &DMatrix<f64>,
    tau: f64,
    m_k: usize,
    always_include: &SubsetMask,
) -> Result<CandidateSet> {
    let opts = SearchOptions {
        tau,
        m_k,
        always_include: always_include.clone(),
        max_p: DEFAULT_EXHAUSTIVE_MAX_P,
        ..SearchOptions::default()
    };
    exhaustive_search_with(qhat, x, &opts)
}

/// RSS of each subset is `rss_full + ‖z − R_S b‖²` with `(R, z)` from a QR of
/// the full universe, solved by a fresh QR of the small `R_S`.
pub fn exhaustive_search_with(
    qhat: &[f64],
    x: &DMatrix<f64>,
    opts: &SearchOptions,
) -> Result<CandidateSet> {
    let prob = setup(qhat, x, opts)?;
    let u = prob.universe.len();
    let qr = Qr::from_columns(x, &prob.universe);
    let mut z = qhat.to_vec();
    qr.apply_qt(&mut z);
    let rss_full: f64 = z[u..].iter().map(|v| v * v).sum();
    z.truncate(u);
    let r = qr.r_row_major();

    let free: Vec<usize> = (0..u)
        .filter(|&pos| !prob.always.contains(prob.universe[pos]))
        .collect();
    let forced: Vec<usize> = (0..u)
        .filter(|&pos| prob.always.contains(prob.universe[pos]))
        .collect();
    let mut ret = Retention::new(opts.m_k, u);
    for mask in 0u64..(1u64 << free.len()) {
        let mut positions = forced.clone();
        positions.extend(
            free.iter()
                .enumerate()
                .filter(|(b, _)| (mask >> b) & 1 == 1)
                .map(|(_, &pos)| pos),
        );
        if positions.is_empty() {
            continue;
        }
        positions.sort_unstable();
        let k = positions.len();
        // R_S is u x k, column-major
        let mut rs = Vec::with_capacity(u * k);
        for &c in &positions {
            rs.extend((0..u).map(|i| if i <= c { r[i * u + c] } else { 0.0 }));
        }
        let small = Qr::factor(rs, u, k);
        let (_, rss) = small.least_squares(&z);
        let subset = SubsetMask::new(positions.iter().map(|&pos| prob.universe[pos]).collect())?;
        ret.offer(Candidate {
            subset,
            rss: rss_full + rss,
        });
    }
    Ok(ret.into_set(opts.tau, opts.always_include.clone()))
}

/// Best subsets per size by branch and bound, with default options.
pub fn branch_and_bound(
    qhat: &[f64],
    x: &DMatrix<f64>,
    tau: f64,
    m_k: usize,
    always_include: &SubsetMask,
) -> Result<CandidateSet> {
    let opts = SearchOptions {
        tau,
        m_k,
        always_include: always_include.clone(),
        ..SearchOptions::default()
    };
    Ok(branch_and_bound_with(qhat, x, &opts)?.0)
}

struct Node {
    factor: TriangularFactor,
    /// Positions `first_free..` of `factor.cols` may still be deleted.
    first_free: usize,
}

struct Walker<'a> {
    prob: &'a Problem<'a>,
    engine: RssEngine,
    ret: Retention,
    nodes: u64,
}

impl Walker<'_> {
    fn child(&self, node: &Node, pos: usize) -> Node {
        let factor = match self.engine {
            RssEngine::Givens => node.factor.drop_column(pos),
            RssEngine::Dense => {
                let mut cols = node.factor.cols.clone();
                cols.remove(pos);
                TriangularFactor::new(self.prob.x, self.prob.qhat, &cols)
            }
        };
        Node {
            factor,
            first_free: pos,
        }
    }

    fn record(&mut self, node: &Node) {
        self.nodes += 1;
        if node.factor.is_empty() {
            return;
        }
        let mut idx = node.factor.cols.clone();
        idx.sort_unstable();
        self.ret.offer(Candidate {
            subset: SubsetMask::new(idx).expect("distinct columns"),
            rss: node.factor.rss,
        });
    }

    /// Whether any subset below `node` could still enter a retained list.
    fn promising(&self, node: &Node) -> bool {
        let k = node.factor.len();
        let d = k - node.first_free;
        if d == 0 {
            return false;
        }
        let lo = (k - d).max(1);
        (lo..k).any(|size| tied(node.factor.rss, self.ret.threshold(size)))
    }

    fn children(&self, node: &Node) -> Vec<usize> {
        // least important columns sit last; visit those deletions first
        (node.first_free..node.factor.len()).rev().collect()
    }

    fn visit(&mut self, node: Node) {
        self.record(&node);
        self.expand(&node);
    }

    fn expand(&mut self, node: &Node) {
        if !self.promising(node) {
            return;
        }
        for pos in self.children(node) {
            let child = self.child(node, pos);
            self.visit(child);
            if !self.promising(node) {
                break;
            }
        }
    }
}

/// Column order for the tree: forced columns first, then free columns by
/// decreasing RSS increase when deleted alone from the full model.
fn tree_order(prob: &Problem<'_>) -> Vec<usize> {
    let root = TriangularFactor::new(prob.x, prob.qhat, &prob.universe);
    let mut scored: Vec<(f64, usize)> = Vec::new();
    let mut forced = Vec::new();
    for (pos, &c) in prob.universe.iter().enumerate() {
        if prob.always.contains(c) {
            forced.push(c);
        } else {
            scored.push((root.drop_column(pos).rss, c));
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    forced.extend(scored.into_iter().map(|(_, c)| c));
    forced
}

/// Branch and bound with explicit options; also returns the node count.
pub fn branch_and_bound_with(
    qhat: &[f64],
    x: &DMatrix<f64>,
    opts: &SearchOptions,
) -> Result<(CandidateSet, SearchStats)> {
    let prob = setup(qhat, x, opts)?;
    let order = tree_order(&prob);
    let n_forced = order.iter().filter(|&&c| prob.always.contains(c)).count();
    let root = Node {
        factor: TriangularFactor::new(x, qhat, &order),
        first_free: n_forced,
    };
    let mut walker = Walker {
        prob: &prob,
        engine: opts.engine,
        ret: Retention::new(opts.m_k, order.len()),
        nodes: 0,
    };
    if !opts.parallel {
        walker.visit(root);
        let stats = SearchStats {
            nodes: walker.nodes,
        };
        return Ok((walker.ret.into_set(opts.tau, opts.always_include.clone()), stats));
    }

    walker.record(&root);
    if !walker.promising(&root) {
        let stats = SearchStats {
            nodes: walker.nodes,
        };
        return Ok((walker.ret.into_set(opts.tau, opts.always_include.clone()), stats));
    }
    let seed = walker.ret.clone();
    let branches: Vec<(Retention, u64)> = walker
        .children(&root)
        .into_par_iter()
        .map(|pos| {
            let mut w = Walker {
                prob: &prob,
                engine: opts.engine,
                ret: seed.clone(),
                nodes: 0,
            };
            let child = w.child(&root, pos);
            w.visit(child);
            (w.ret, w.nodes)
        })
        .collect();
    let mut ret = walker.ret;
    let mut nodes = walker.nodes;
    for (r, count) in branches {
        ret.merge(r);
        nodes += count;
    }
    Ok((ret.into_set(opts.tau, opts.always_include.clone()), SearchStats { nodes }))
}

/// Intercept plus the `limit - 1` covariates with the largest
/// `|mean ξ_j| + |mean γ_j|`, ties going to the smaller index. A limit at or
/// above `p` keeps every column.
pub fn prescreen(pd: &PosteriorDraws, limit: usize) -> Result<SubsetMask> {
    if limit < 1 {
        return Err(Error::InvalidArgument("prescreen limit must be at least 1".into()));
    }
    if pd.draws.is_empty() {
        return Err(Error::InvalidArgument("no posterior draws".into()));
    }
    let p = pd.p;
    if limit >= p {
        return Ok(SubsetMask::full(p));
    }
    let xi = pd.mean_xi();
    let gamma = pd.mean_gamma();
    let mut scored: Vec<(f64, usize)> = (1..p).map(|j| (xi[j].abs() + gamma[j].abs(), j)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut keep: Vec<usize> = vec![0];
    keep.extend(scored.into_iter().take(limit - 1).map(|(_, j)| j));
    SubsetMask::new(keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BlockRates, LlsParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn instance(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, j| {
            if j == 0 {
                1.0
            } else {
                rng.sample(StandardNormal)
            }
        });
        let beta: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let q = (0..n)
            .map(|i| {
                (0..p).map(|j| x[(i, j)] * beta[j]).sum::<f64>()
                    + rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        (x, q)
    }

    fn assert_same(a: &CandidateSet, b: &CandidateSet) {
        assert_eq!(a.sizes(), b.sizes());
        for k in a.sizes() {
            let (ra, rb) = (a.rss_by_size(k), b.rss_by_size(k));
            assert_eq!(ra.len(), rb.len(), "size {k}");
            for (u, v) in ra.iter().zip(&rb) {
                assert!((u - v).abs() < 1e-9, "size {k}: {u} vs {v}");
            }
        }
    }

    #[test]
    fn two_column_design_has_one_subset_per_size() {
        let (x, q) = instance(10, 2, 1);
        let c = exhaustive_search(&q, &x, 0.5, 50, &SubsetMask::intercept()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.subsets[0].subset.indices(), &[0]);
        assert_eq!(c.subsets[1].subset.indices(), &[0, 1]);
        let b = branch_and_bound(&q, &x, 0.5, 50, &SubsetMask::intercept()).unwrap();
        assert_eq!(b, c);
    }

    #[test]
    fn orthogonal_design_picks_aligned_column() {
        // columns of a 4x4 Hadamard matrix are orthogonal
        let h = [
            1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0, 1.0,
        ];
        let x = DMatrix::from_column_slice(4, 4, &h);
        let q: Vec<f64> = (0..4)
            .map(|i| 0.5 + 3.0 * x[(i, 2)] + 0.1 * x[(i, 1)])
            .collect();
        for c in [
            exhaustive_search(&q, &x, 0.5, 1, &SubsetMask::intercept()).unwrap(),
            branch_and_bound(&q, &x, 0.5, 1, &SubsetMask::intercept()).unwrap(),
        ] {
            let best2 = c.of_size(2).next().unwrap();
            assert_eq!(best2.subset.to_one_based(), vec![1, 3]);
        }
    }

    #[test]
    fn tied_subsets_are_all_kept_in_index_order() {
        // q is symmetric in columns 2 and 3 of an orthogonal design
        let h = [
            1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0, 1.0,
        ];
        let x = DMatrix::from_column_slice(4, 4, &h);
        let q: Vec<f64> = (0..4).map(|i| x[(i, 1)] + x[(i, 2)] + 0.2 * x[(i, 3)]).collect();
        let c = exhaustive_search(&q, &x, 0.5, 1, &SubsetMask::intercept()).unwrap();
        let size2: Vec<String> = c.of_size(2).map(|c| c.subset.to_string()).collect();
        assert_eq!(size2, vec!["1;2", "1;3"]);
        let b = branch_and_bound(&q, &x, 0.5, 1, &SubsetMask::intercept()).unwrap();
        let b2: Vec<String> = b.of_size(2).map(|c| c.subset.to_string()).collect();
        assert_eq!(b2, size2);
        assert_same(&b, &c);
    }

    #[test]
    fn branch_and_bound_matches_enumeration() {
        for (seed, p, m_k) in [(1, 8, 5), (2, 8, 1), (3, 10, 50), (4, 12, 5), (5, 10, 1)] {
            let (x, q) = instance(40, p, seed);
            let ex = exhaustive_search(&q, &x, 0.5, m_k, &SubsetMask::intercept()).unwrap();
            let bb = branch_and_bound(&q, &x, 0.5, m_k, &SubsetMask::intercept()).unwrap();
            assert_same(&ex, &bb);
        }
    }

    #[test]
    fn engines_and_parallel_mode_agree() {
        let (x, q) = instance(50, 11, 9);
        let base = SearchOptions {
            m_k: 4,
            ..SearchOptions::default()
        };
        let (givens, _) = branch_and_bound_with(&q, &x, &base).unwrap();
        let dense_opts = SearchOptions {
            engine: RssEngine::Dense,
            ..base.clone()
        };
        let (dense, _) = branch_and_bound_with(&q, &x, &dense_opts).unwrap();
        assert_same(&givens, &dense);
        let par_opts = SearchOptions {
            parallel: true,
            ..base.clone()
        };
        let (par, _) = branch_and_bound_with(&q, &x, &par_opts).unwrap();
        assert_eq!(par, givens);
    }

    #[test]
    fn dominant_covariate_prunes_the_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (n, p) = (60, 12);
        let x = DMatrix::from_fn(n, p, |_, j| {
            if j == 0 {
                1.0
            } else {
                rng.sample(StandardNormal)
            }
        });
        let q: Vec<f64> = (0..n)
            .map(|i| 10.0 * x[(i, 4)] + 0.1 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let opts = SearchOptions {
            m_k: 50,
            ..SearchOptions::default()
        };
        let (_, stats) = branch_and_bound_with(&q, &x, &opts).unwrap();
        assert!(stats.nodes < 1 << 12, "{}", stats.nodes);
        let opts = SearchOptions {
            m_k: 1,
            ..SearchOptions::default()
        };
        let (_, stats) = branch_and_bound_with(&q, &x, &opts).unwrap();
        assert!(stats.nodes < 1 << 10, "{}", stats.nodes);
    }

    #[test]
    fn noise_column_never_hurts_best_rss() {
        let (x, q) = instance(30, 7, 23);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let mut wide = x.clone().insert_column(7, 0.0);
        for i in 0..30 {
            wide[(i, 7)] = rng.sample(StandardNormal);
        }
        let a = branch_and_bound(&q, &x, 0.5, 1, &SubsetMask::intercept()).unwrap();
        let b = branch_and_bound(&q, &wide, 0.5, 1, &SubsetMask::intercept()).unwrap();
        for k in a.sizes() {
            assert!(b.rss_by_size(k)[0] <= a.rss_by_size(k)[0] + 1e-12);
        }
    }

    #[test]
    fn forced_columns_are_in_every_subset() {
        let (x, q) = instance(30, 6, 31);
        let always = SubsetMask::new(vec![0, 3]).unwrap();
        let c = branch_and_bound(&q, &x, 0.5, 3, &always).unwrap();
        assert!(c.subsets.iter().all(|s| always.is_subset_of(&s.subset)));
        assert_eq!(c.sizes(), vec![2, 3, 4, 5, 6]);
    }

    #[test]
    fn search_limit_is_enforced() {
        let (x, q) = instance(60, 22, 3);
        assert!(matches!(
            exhaustive_search(&q, &x, 0.5, 1, &SubsetMask::intercept()),
            Err(Error::SearchLimit { p: 22, limit: 20 })
        ));
        let opts = SearchOptions {
            max_p: 21,
            ..SearchOptions::default()
        };
        assert!(branch_and_bound_with(&q, &x, &opts).is_err());
        let universe = SubsetMask::new((0..10).collect()).unwrap();
        let opts = SearchOptions {
            max_p: 21,
            universe: Some(universe.clone()),
            ..SearchOptions::default()
        };
        let (c, _) = branch_and_bound_with(&q, &x, &opts).unwrap();
        assert!(c.subsets.iter().all(|s| s.subset.is_subset_of(&universe)));
    }

    #[test]
    fn csv_layout() {
        let (x, q) = instance(10, 3, 2);
        let c = exhaustive_search(&q, &x, 0.25, 2, &SubsetMask::intercept()).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "tau,size,rank,rss,indices");
        assert!(lines[1].starts_with("0.25,1,1,"));
        assert!(lines[1].ends_with(",1"));
        assert_eq!(lines.len(), 1 + 1 + 2 + 1);
    }

    fn draws_with_means(xi: &[f64], gamma: &[f64]) -> PosteriorDraws {
        let p = xi.len();
        PosteriorDraws {
            p,
            draws: vec![LlsParams {
                xi: xi.to_vec(),
                gamma: gamma.to_vec(),
                sigma: 1.0,
                lambda_xi: vec![1.0; p - 1],
                lambda_gamma: vec![1.0; p - 1],
            }],
            burn_in_discarded: 0,
            acceptance_rates: BlockRates::default(),
        }
    }

    #[test]
    fn prescreen_scores_and_ties() {
        let pd = draws_with_means(&[9.0, 3.0, 1.0, 2.0], &[9.0, 0.0, 2.0, 0.0]);
        assert_eq!(prescreen(&pd, 3).unwrap().to_one_based(), vec![1, 2, 3]);
        assert_eq!(prescreen(&pd, 4).unwrap(), SubsetMask::full(4));
        assert_eq!(prescreen(&pd, 1).unwrap(), SubsetMask::intercept());
        assert!(prescreen(&pd, 0).is_err());
    }
}
