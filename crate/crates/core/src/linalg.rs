//! Dense linear-algebra helpers shared by the oracle and the learners.
//!
//! Every rank judgement in the crate goes through [`RankCutoff`]: a singular
//! value counts as nonzero iff it exceeds `sigma_max * max(rows, cols) * rel`.
//! The `*_scaled` variants replace `sigma_max` by `max(sigma_max, scale)` so
//! that a matrix which is zero up to roundoff is not mistaken for a
//! well-conditioned one. Using one knob keeps the decomposition, the pseudoinverse and the kernel
//! bases consistent with each other.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Default relative tolerance for numerical rank.
pub const DEFAULT_RANK_REL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankCutoff {
    pub rel: f64,
}

impl Default for RankCutoff {
    fn default() -> Self {
        Self {
            rel: DEFAULT_RANK_REL_TOL,
        }
    }
}

impl RankCutoff {
    pub fn new(rel: f64) -> Self {
        Self { rel }
    }

    /// Absolute threshold below which a singular value is treated as zero.
    pub fn threshold(&self, sigma_max: f64, rows: usize, cols: usize) -> f64 {
        sigma_max * rows.max(cols).max(1) as f64 * self.rel
    }
}

/// Singular value decomposition with a complete right basis.
#[derive(Clone, Debug)]
pub struct FullSvd {
    /// Singular values in descending order, padded with zeros to `cols`.
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns, ordered like `singular_values`.
    pub v: DMatrix<f64>,
    pub rank: usize,
    pub threshold: f64,
}

impl FullSvd {
    pub fn new(m: &DMatrix<f64>, cutoff: RankCutoff) -> Self {
        Self::scaled(m, cutoff, 0.0)
    }

    /// Rank threshold taken relative to `max(sigma_max, scale)`.
    pub fn scaled(m: &DMatrix<f64>, cutoff: RankCutoff, scale: f64) -> Self {
        let (rows, cols) = m.shape();
        let Svd { mut s, v, .. } = svd(m);
        s.resize(cols, 0.0);
        let sigma_max = s.first().copied().unwrap_or(0.0);
        let threshold = cutoff.threshold(sigma_max.max(scale), rows, cols);
        let rank = if sigma_max == 0.0 {
            0
        } else {
            s.iter().filter(|&&x| x > threshold).count()
        };
        Self {
            singular_values: s,
            v,
            rank,
            threshold,
        }
    }

    /// Orthonormal basis of the row space (`ker(M)^⊥`), `cols x rank`.
    pub fn row_space(&self) -> DMatrix<f64> {
        self.v.columns(0, self.rank).into_owned()
    }

    /// Orthonormal basis of the kernel, `cols x (cols - rank)`.
    pub fn kernel(&self) -> DMatrix<f64> {
        let n = self.v.ncols();
        self.v.columns(self.rank, n - self.rank).into_owned()
    }
}

struct Svd {
    /// `min(rows, cols)` values, descending.
    s: Vec<f64>,
    /// `rows x rows`.
    u: DMatrix<f64>,
    /// `cols x cols`.
    v: DMatrix<f64>,
}

// nalgebra's SVD can return inaccurate factors for rank-deficient input, so
// every decomposition in the crate goes through faer.
fn svd(m: &DMatrix<f64>) -> Svd {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Svd {
            s: Vec::new(),
            u: DMatrix::identity(rows, rows),
            v: DMatrix::identity(cols, cols),
        };
    }
    let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let dec = fm.svd().expect("SVD of a finite matrix converges");
    let (u, sv, v) = (dec.U(), dec.S().column_vector(), dec.V());
    Svd {
        s: (0..sv.nrows()).map(|i| sv[i]).collect(),
        u: DMatrix::from_fn(rows, rows, |i, j| u[(i, j)]),
        v: DMatrix::from_fn(cols, cols, |i, j| v[(i, j)]),
    }
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    svd(m).s
}

pub fn numerical_rank(m: &DMatrix<f64>, cutoff: RankCutoff) -> usize {
    FullSvd::new(m, cutoff).rank
}

pub fn kernel_basis(m: &DMatrix<f64>, cutoff: RankCutoff) -> DMatrix<f64> {
    FullSvd::new(m, cutoff).kernel()
}

pub fn row_space_basis(m: &DMatrix<f64>, cutoff: RankCutoff) -> DMatrix<f64> {
    FullSvd::new(m, cutoff).row_space()
}

/// Moore–Penrose pseudoinverse with the shared rank cutoff.
pub fn pseudo_inverse(m: &DMatrix<f64>, cutoff: RankCutoff) -> DMatrix<f64> {
    pseudo_inverse_scaled(m, cutoff, 0.0)
}

pub fn pseudo_inverse_scaled(m: &DMatrix<f64>, cutoff: RankCutoff, scale: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    let Svd { s, u, v } = svd(m);
    let sigma_max = s.first().copied().unwrap_or(0.0);
    let thr = cutoff.threshold(sigma_max.max(scale), rows, cols);
    let mut out = DMatrix::zeros(cols, rows);
    for (k, &sk) in s.iter().enumerate() {
        if sigma_max > 0.0 && sk > thr {
            out += (v.column(k) * u.column(k).transpose()) / sk;
        }
    }
    out
}

/// Minimal-norm least-squares solution of `m x = rhs`.
pub fn min_norm_solve(m: &DMatrix<f64>, rhs: &DVector<f64>, cutoff: RankCutoff) -> DVector<f64> {
    pseudo_inverse(m, cutoff) * rhs
}

/// Orthonormal basis of the orthogonal complement of `span(basis)` in R^dim.
pub fn orthogonal_complement(basis: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    if basis.ncols() == 0 {
        return DMatrix::identity(dim, dim);
    }
    let proj = DMatrix::identity(dim, dim) - basis * basis.transpose();
    let svd = FullSvd::new(&proj, RankCutoff::new(1e-8));
    // The complement projector has singular values exactly 0 or 1.
    let keep = svd.singular_values.iter().filter(|&&s| s > 0.5).count();
    svd.v.columns(0, keep).into_owned()
}

/// Largest sine of the principal angles between two subspaces given by
/// orthonormal bases. `None` if the dimensions differ.
pub fn max_principal_angle_sin(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<f64> {
    if a.ncols() != b.ncols() || a.nrows() != b.nrows() {
        return None;
    }
    if a.ncols() == 0 {
        return Some(0.0);
    }
    // ||(I - A A^T) B||_2 is the sine of the largest principal angle.
    let resid = b - a * (a.transpose() * b);
    Some(spectral_norm(&resid))
}

pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    let n = m.nrows();
    let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let ev = fm
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("symmetric eigenvalues of a finite matrix converge");
    ev.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Greedy column selection by largest residual norm (Gram–Schmidt with column
/// pivoting). Returns up to `count` column indices in selection order.
pub fn pivoted_columns(m: &DMatrix<f64>, count: usize) -> Vec<usize> {
    let cols = m.ncols();
    let mut resid: Vec<DVector<f64>> = (0..cols).map(|j| m.column(j).into_owned()).collect();
    let mut chosen = Vec::with_capacity(count);
    for _ in 0..count.min(cols) {
        let best = (0..cols)
            .filter(|j| !chosen.contains(j))
            .max_by(|&a, &b| resid[a].norm().total_cmp(&resid[b].norm()));
        let Some(best) = best else { break };
        let norm = resid[best].norm();
        if norm == 0.0 {
            break;
        }
        let q = &resid[best] / norm;
        chosen.push(best);
        for (j, r) in resid.iter_mut().enumerate() {
            if !chosen.contains(&j) {
                let c = q.dot(r);
                r.axpy(-c, &q, 1.0);
            }
        }
    }
    chosen
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Spectral norm.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    svd(m).s.first().copied().unwrap_or(0.0)
}
