//! Split `X = X₁ + 1θᵀ` so that the all-ones direction lives only in the
//! rank-one part and `1 ∉ col(X₁)`.
//!
//! The construction picks `m = rank(X)` independent columns by norm-pivoted
//! Gram–Schmidt. If `1` lies in their span with coefficients `c`, the column
//! with the largest `|c_i|` is dropped from the basis `Z₁`, and every other
//! column of `X` is rewritten as `Z₁ C_j + θ_j 1`. Otherwise `X₁ = X`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::{max_abs, pivoted_columns, pseudo_inverse, pseudo_inverse_scaled, spectral_norm, FullSvd, RankCutoff};

/// `1 ∈ col(X)` iff the least-squares residual of fitting `1` is below this
/// times `sqrt(|S|)`.
pub const ONE_IN_COL_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct FeatureDecomposition {
    pub x1: DMatrix<f64>,
    /// `X₂ = 1 θᵀ`.
    pub theta: DVector<f64>,
    pub rank_x: usize,
    pub rank_x1: usize,
    pub one_in_col_x: bool,
    /// Column indices of `X` forming the basis `Z₁` of `col(X₁)`.
    pub basis_columns: Vec<usize>,
    cutoff: RankCutoff,
    /// `|X|`; ranks of `X₁` are judged relative to at least this.
    scale: f64,
}

/// Residual norm of the least-squares fit of `1` by the columns of `m`.
pub fn ones_fit_residual(m: &DMatrix<f64>, cutoff: RankCutoff) -> f64 {
    let n = m.nrows();
    let ones = DVector::from_element(n, 1.0);
    if m.ncols() == 0 {
        return ones.norm();
    }
    let c = pseudo_inverse(m, cutoff) * &ones;
    (m * c - ones).norm()
}

fn select_columns(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), cols.len());
    for (k, &j) in cols.iter().enumerate() {
        out.set_column(k, &m.column(j));
    }
    out
}

pub fn feature_decomposition(x: &FeatureMatrix, cutoff: RankCutoff) -> Result<FeatureDecomposition> {
    let xm = x.matrix();
    let (n, d) = xm.shape();
    let rank_x = FullSvd::new(xm, cutoff).rank;
    let scale = spectral_norm(xm);
    if rank_x == 0 {
        return Err(Error::ZeroFeatureMatrix);
    }
    let mut independent = pivoted_columns(xm, rank_x);
    independent.sort_unstable();
    let z = select_columns(xm, &independent);
    let ones = DVector::from_element(n, 1.0);
    let coeffs = pseudo_inverse(&z, cutoff) * &ones;
    let residual = (&z * &coeffs - &ones).norm();
    let one_in_col_x = residual <= ONE_IN_COL_TOL * (n as f64).sqrt();

    if !one_in_col_x {
        return Ok(FeatureDecomposition {
            x1: xm.clone(),
            theta: DVector::zeros(d),
            rank_x,
            rank_x1: rank_x,
            one_in_col_x,
            basis_columns: independent,
            cutoff,
            scale,
        });
    }

    let pivot = (0..coeffs.len())
        .max_by(|&a, &b| coeffs[a].abs().total_cmp(&coeffs[b].abs()))
        .expect("rank >= 1");
    let basis_columns: Vec<usize> = independent
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != pivot)
        .map(|(_, &j)| j)
        .collect();
    let z1 = select_columns(xm, &basis_columns);
    // [Z₁ 1] has full column rank m, so its pseudoinverse gives exact coordinates.
    let mut z1_one = DMatrix::zeros(n, z1.ncols() + 1);
    z1_one.view_mut((0, 0), (n, z1.ncols())).copy_from(&z1);
    z1_one.set_column(z1.ncols(), &ones);
    let coords = pseudo_inverse(&z1_one, cutoff);

    let mut x1 = DMatrix::zeros(n, d);
    let mut theta = DVector::zeros(d);
    for j in 0..d {
        if basis_columns.contains(&j) {
            x1.set_column(j, &xm.column(j));
            continue;
        }
        let sol = &coords * xm.column(j);
        let c_j = sol.rows(0, z1.ncols());
        theta[j] = sol[z1.ncols()];
        x1.set_column(j, &(&z1 * c_j));
    }
    let rank_x1 = FullSvd::scaled(&x1, cutoff, scale).rank;
    Ok(FeatureDecomposition {
        x1,
        theta,
        rank_x,
        rank_x1,
        one_in_col_x,
        basis_columns,
        cutoff,
        scale,
    })
}

/// Measured quantities behind the decomposition's invariants.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DecompositionCheck {
    /// `max |X₁ + 1θᵀ - X|`.
    pub reconstruction_error: f64,
    pub rank_x1: usize,
    /// `rank(X) - [1 ∈ col(X)]`.
    pub expected_rank_x1: usize,
    /// Residual of fitting `1` by the columns of `X₁`.
    pub ones_residual_x1: f64,
    /// The residual must exceed this for `1 ∉ col(X₁)`.
    pub ones_residual_floor: f64,
}

impl DecompositionCheck {
    pub fn holds(&self, reconstruction_tol: f64) -> bool {
        self.reconstruction_error <= reconstruction_tol
            && self.rank_x1 == self.expected_rank_x1
            && self.ones_residual_x1 > self.ones_residual_floor
    }
}

impl FeatureDecomposition {
    /// `X₂ = 1θᵀ`.
    pub fn x2(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.x1.nrows(), self.theta.len(), |_, j| self.theta[j])
    }

    /// Orthonormal basis of `ker(X₁)`.
    pub fn kernel_x1(&self) -> DMatrix<f64> {
        FullSvd::scaled(&self.x1, self.cutoff, self.scale).kernel()
    }

    /// Orthonormal basis of `ker(X₁)^⊥`.
    pub fn row_space_x1(&self) -> DMatrix<f64> {
        FullSvd::scaled(&self.x1, self.cutoff, self.scale).row_space()
    }

    /// `Π = X₁⁺ X₁`, the orthogonal projector onto `ker(X₁)^⊥`.
    pub fn projector(&self) -> DMatrix<f64> {
        pseudo_inverse_scaled(&self.x1, self.cutoff, self.scale) * &self.x1
    }

    pub fn cutoff(&self) -> RankCutoff {
        self.cutoff
    }

    pub fn check(&self, x: &FeatureMatrix) -> DecompositionCheck {
        let n = x.num_states();
        DecompositionCheck {
            reconstruction_error: max_abs(&(&self.x1 + self.x2() - x.matrix())),
            rank_x1: FullSvd::scaled(&self.x1, self.cutoff, self.scale).rank,
            expected_rank_x1: self.rank_x - usize::from(self.one_in_col_x),
            ones_residual_x1: ones_fit_residual(&self.x1, self.cutoff),
            ones_residual_floor: 1e-6 * (n as f64).sqrt(),
        }
    }
}
