//! Small dense least-squares kernels.
//!
//! [`Qr`] is a thin Householder factorization used for every projection in the
//! crate. [`TriangularFactor`] carries the `R` factor and rotated response of a
//! least-squares problem and supports deleting columns with Givens rotations,
//! which is what the subset search walks with.

use nalgebra::DMatrix;

/// Relative size of a diagonal entry of `R` (against the original column norm)
/// below which a column is treated as linearly dependent on its predecessors.
pub const RANK_TOL: f64 = 1e-9;

/// Thin Householder QR of an `n x k` matrix, `n >= k`.
#[derive(Debug, Clone)]
pub struct Qr {
    n: usize,
    k: usize,
    /// Column-major; Householder vectors below the diagonal (with implicit
    /// leading entry stored in `heads`), `R` on and above.
    packed: Vec<f64>,
    heads: Vec<f64>,
    betas: Vec<f64>,
    col_norms: Vec<f64>,
}

impl Qr {
    /// Factor the given columns of `x`, in the order given.
    pub fn from_columns(x: &DMatrix<f64>, cols: &[usize]) -> Qr {
        let n = x.nrows();
        let k = cols.len();
        let data = x.as_slice();
        let mut packed = Vec::with_capacity(n * k);
        for &c in cols {
            packed.extend_from_slice(&data[c * n..(c + 1) * n]);
        }
        Qr::factor(packed, n, k)
    }

    pub fn new(x: &DMatrix<f64>) -> Qr {
        let cols: Vec<usize> = (0..x.ncols()).collect();
        Qr::from_columns(x, &cols)
    }

    /// Factor a column-major `n x k` buffer.
    pub fn factor(mut a: Vec<f64>, n: usize, k: usize) -> Qr {
        assert_eq!(a.len(), n * k);
        assert!(n >= k, "thin QR needs n >= k");
        let col_norms: Vec<f64> = (0..k).map(|j| norm(&a[j * n..(j + 1) * n])).collect();
        let mut heads = vec![0.0; k];
        let mut betas = vec![0.0; k];
        for j in 0..k {
            let (left, right) = a.split_at_mut((j + 1) * n);
            let col = &mut left[j * n + j..j * n + n];
            let alpha_norm = norm(col);
            if alpha_norm == 0.0 {
                heads[j] = 0.0;
                betas[j] = 0.0;
                continue;
            }
            let alpha = if col[0] > 0.0 { -alpha_norm } else { alpha_norm };
            let v0 = col[0] - alpha;
            // v = (v0, col[1..]); beta = 2 / v'v
            let vtv = v0 * v0 + col[1..].iter().map(|v| v * v).sum::<f64>();
            let beta = if vtv > 0.0 { 2.0 / vtv } else { 0.0 };
            heads[j] = v0;
            betas[j] = beta;
            col[0] = alpha;
            let tail = &col[1..];
            for jj in 0..(k - j - 1) {
                let other = &mut right[jj * n + j..jj * n + n];
                let mut dot = v0 * other[0];
                for (o, v) in other[1..].iter().zip(tail) {
                    dot += o * v;
                }
                let s = beta * dot;
                other[0] -= s * v0;
                for (o, v) in other[1..].iter_mut().zip(tail) {
                    *o -= s * v;
                }
            }
        }
        Qr {
            n,
            k,
            packed: a,
            heads,
            betas,
            col_norms,
        }
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.k
    }

    /// Positions (in factor order) whose columns are numerically dependent on
    /// the preceding ones.
    pub fn deficient_columns(&self) -> Vec<usize> {
        (0..self.k)
            .filter(|&j| {
                let d = self.r(j, j).abs();
                d <= RANK_TOL * self.col_norms[j] || self.col_norms[j] == 0.0
            })
            .collect()
    }

    #[inline]
    pub fn r(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i <= j);
        self.packed[j * self.n + i]
    }

    /// Upper-triangular `R`, row-major `k x k`.
    pub fn r_row_major(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.k * self.k];
        for i in 0..self.k {
            for j in i..self.k {
                out[i * self.k + j] = self.r(i, j);
            }
        }
        out
    }

    /// Overwrite `b` (length n) with `Qᵀ b`.
    pub fn apply_qt(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        for j in 0..self.k {
            let beta = self.betas[j];
            if beta == 0.0 {
                continue;
            }
            let v0 = self.heads[j];
            let tail = &self.packed[j * n + j + 1..(j + 1) * n];
            let mut dot = v0 * b[j];
            for (bi, v) in b[j + 1..].iter().zip(tail) {
                dot += bi * v;
            }
            let s = beta * dot;
            b[j] -= s * v0;
            for (bi, v) in b[j + 1..].iter_mut().zip(tail) {
                *bi -= s * v;
            }
        }
    }

    /// Solve `R c = rhs` for the leading `k` entries of `rhs`.
    pub fn solve_r(&self, rhs: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut c = rhs[..k].to_vec();
        for i in (0..k).rev() {
            let mut s = c[i];
            for j in i + 1..k {
                s -= self.r(i, j) * c[j];
            }
            c[i] = s / self.r(i, i);
        }
        c
    }

    /// Least-squares coefficients and residual sum of squares for response `b`.
    pub fn least_squares(&self, b: &[f64]) -> (Vec<f64>, f64) {
        let mut work = b.to_vec();
        self.apply_qt(&mut work);
        let rss = work[self.k..].iter().map(|v| v * v).sum();
        (self.solve_r(&work), rss)
    }
}

fn norm(v: &[f64]) -> f64 {
    // scaled to avoid overflow on extreme inputs
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

/// `R` factor (row-major, `k x k`) and rotated response `z = Qᵀ y` (first `k`
/// entries) of a least-squares problem, together with its residual sum of
/// squares. `cols` labels the columns of `R`.
#[derive(Debug, Clone)]
pub struct TriangularFactor {
    pub cols: Vec<usize>,
    r: Vec<f64>,
    z: Vec<f64>,
    pub rss: f64,
}

impl TriangularFactor {
    /// Factor `x[:, cols]` against response `y`.
    pub fn new(x: &DMatrix<f64>, y: &[f64], cols: &[usize]) -> TriangularFactor {
        let qr = Qr::from_columns(x, cols);
        let mut z = y.to_vec();
        qr.apply_qt(&mut z);
        let rss = z[cols.len()..].iter().map(|v| v * v).sum();
        z.truncate(cols.len());
        TriangularFactor {
            cols: cols.to_vec(),
            r: qr.r_row_major(),
            z,
            rss,
        }
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    /// Factor with the column at position `pos` deleted. The Hessenberg
    /// bulge left by the deletion is chased out with Givens rotations, and
    /// the last rotated response entry moves into the residual.
    pub fn drop_column(&self, pos: usize) -> TriangularFactor {
        let k = self.cols.len();
        assert!(pos < k);
        let m = k - 1;
        // R without column `pos`: k rows x m columns, row-major
        let mut h = vec![0.0; k * m];
        for i in 0..k {
            let mut jj = 0;
            for j in 0..k {
                if j == pos {
                    continue;
                }
                h[i * m + jj] = self.r[i * k + j];
                jj += 1;
            }
        }
        let mut z = self.z.clone();
        for i in pos..m {
            let a = h[i * m + i];
            let b = h[(i + 1) * m + i];
            if b == 0.0 {
                continue;
            }
            let rho = a.hypot(b);
            let (c, s) = (a / rho, b / rho);
            for j in i..m {
                let u = h[i * m + j];
                let v = h[(i + 1) * m + j];
                h[i * m + j] = c * u + s * v;
                h[(i + 1) * m + j] = -s * u + c * v;
            }
            let (u, v) = (z[i], z[i + 1]);
            z[i] = c * u + s * v;
            z[i + 1] = -s * u + c * v;
        }
        let last = z[m];
        z.truncate(m);
        let mut r = vec![0.0; m * m];
        for i in 0..m {
            r[i * m..(i + 1) * m].copy_from_slice(&h[i * m..(i + 1) * m]);
        }
        let mut cols = self.cols.clone();
        cols.remove(pos);
        TriangularFactor {
            cols,
            r,
            z,
            rss: self.rss + last * last,
        }
    }

    /// Coefficients for the current columns.
    pub fn coefficients(&self) -> Vec<f64> {
        let k = self.cols.len();
        let mut c = self.z.clone();
        for i in (0..k).rev() {
            let mut s = c[i];
            for j in i + 1..k {
                s -= self.r[i * k + j] * c[j];
            }
            c[i] = s / self.r[i * k + i];
        }
        c
    }
}
