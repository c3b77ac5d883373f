use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, RankCutoff};

/// `|S| x d` feature matrix whose `s`-th row is `x(s)`. No rank assumption.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    matrix: DMatrix<f64>,
    /// Row-major copy for the per-step hot path.
    rows: Vec<f64>,
    rank: usize,
}

impl FeatureMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        Self::with_cutoff(matrix, RankCutoff::default())
    }

    pub fn with_cutoff(matrix: DMatrix<f64>, cutoff: RankCutoff) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::DimensionMismatch("feature matrix must be non-empty".into()));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("feature matrix has a non-finite entry".into()));
        }
        let rows = matrix.transpose().as_slice().to_vec();
        let rank = numerical_rank(&matrix, cutoff);
        Ok(Self { matrix, rows, rank })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch("feature rows have unequal length".into()));
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n)).expect("identity is a valid feature matrix")
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn num_states(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Numerical rank under the cutoff used at construction.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `x(s)`.
    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        let d = self.dim();
        &self.rows[s * d..(s + 1) * d]
    }

    /// `max_s ||x(s)||`.
    pub fn max_row_norm(&self) -> f64 {
        (0..self.num_states())
            .map(|s| self.row(s).iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.num_states()).map(|s| self.row(s).to_vec()).collect()
    }
}
