use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{max_principal_angle_sin, max_symmetric_eigenvalue, pseudo_inverse_scaled, symmetric_part, FullSvd, RankCutoff};
use crate::oracle::decomposition::FeatureDecomposition;
use crate::oracle::operators::TdSystem;

const ORTHONORMAL_TOL: f64 = 1e-10;
const CONSISTENCY_TOL: f64 = 1e-6;
const KERNEL_ANGLE_TOL: f64 = 1e-8;

/// `{particular + basis z}` with orthonormal `basis` columns.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSet {
    particular: DVector<f64>,
    basis: DMatrix<f64>,
}

impl AffineSet {
    pub fn new(particular: DVector<f64>, basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != particular.len() {
            return Err(Error::DimensionMismatch(format!(
                "basis has {} rows, point has {} entries",
                basis.nrows(),
                particular.len()
            )));
        }
        let k = basis.ncols();
        let gram_err = (basis.transpose() * &basis - DMatrix::identity(k, k)).amax();
        if k > 0 && gram_err > ORTHONORMAL_TOL {
            return Err(Error::InvalidModel(format!("basis is not orthonormal (error {gram_err:e})")));
        }
        Ok(Self { particular, basis })
    }

    pub fn point(p: DVector<f64>) -> Self {
        let n = p.len();
        Self {
            particular: p,
            basis: DMatrix::zeros(n, 0),
        }
    }

    pub fn particular(&self) -> &DVector<f64> {
        &self.particular
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.particular.len()
    }

    /// Dimension of the direction subspace.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Same set, different representative point. `p` must be a member.
    pub fn with_particular(&self, p: DVector<f64>) -> Result<Self> {
        let tol = 1e-8 * self.particular.norm().max(1.0);
        if self.distance_sq(&p).sqrt() > tol {
            return Err(Error::InvalidModel("new particular point is not in the set".into()));
        }
        Self::new(p, self.basis.clone())
    }

    /// `Γ(w) = p + N Nᵀ (w - p)`.
    pub fn project(&self, w: &DVector<f64>) -> DVector<f64> {
        let diff = w - &self.particular;
        &self.particular + &self.basis * (self.basis.transpose() * diff)
    }

    /// `d(w, W)²`.
    pub fn distance_sq(&self, w: &DVector<f64>) -> f64 {
        let diff = w - &self.particular;
        let resid = &diff - &self.basis * (self.basis.transpose() * &diff);
        resid.norm_squared()
    }

    /// `L(w) = d(w, W)² / 2`.
    pub fn lyapunov(&self, w: &DVector<f64>) -> f64 {
        0.5 * self.distance_sq(w)
    }

    /// `∇L(w) = w - Γ(w)`.
    pub fn lyapunov_gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        w - self.project(w)
    }

    /// Point of the set for direction coordinates `z`.
    pub fn member(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.particular + &self.basis * z
    }
}

/// `W = {w : A w + b = 0}` with the minimal-norm solution as representative
/// and an orthonormal basis of `ker(A)` as directions.
pub fn solution_set(sys: &TdSystem, cutoff: RankCutoff) -> Result<AffineSet> {
    let particular = pseudo_inverse_scaled(&sys.a, cutoff, sys.scale) * (-&sys.b);
    let residual = (&sys.a * &particular + &sys.b).norm();
    if residual > CONSISTENCY_TOL {
        return Err(Error::InconsistentSystem { residual });
    }
    let basis = FullSvd::scaled(&sys.a, cutoff, sys.scale).kernel();
    AffineSet::new(particular, basis)
}

/// [`solution_set`] for `(Ā, b̄)`, additionally requiring that `ker(Ā)` and
/// `ker(X₁)` coincide (principal angles at most 1e-8).
pub fn ar_solution_set(sys: &TdSystem, decomp: &FeatureDecomposition, cutoff: RankCutoff) -> Result<AffineSet> {
    let set = solution_set(sys, cutoff)?;
    let ker_x1 = decomp.kernel_x1();
    match max_principal_angle_sin(set.basis(), &ker_x1) {
        Some(s) if s <= KERNEL_ANGLE_TOL => Ok(set),
        Some(s) => Err(Error::LemmaViolation {
            lemma: "ker(Ā) = ker(X₁)",
            detail: format!("largest principal angle sine {s:e}"),
        }),
        None => Err(Error::LemmaViolation {
            lemma: "ker(Ā) = ker(X₁)",
            detail: format!("dim ker(Ā) = {}, dim ker(X₁) = {}", set.dim(), ker_x1.ncols()),
        }),
    }
}

/// `ξ = -λ_max(Bᵀ sym(M) B)`. Positive `ξ` certifies `xᵀ M x <= -ξ |x|²` on
/// `span(B)`. A zero-dimensional subspace returns `+∞`.
pub fn neg_def_margin(m: &DMatrix<f64>, basis: &DMatrix<f64>) -> f64 {
    if basis.ncols() == 0 {
        return f64::INFINITY;
    }
    let restricted = basis.transpose() * symmetric_part(m) * basis;
    -max_symmetric_eigenvalue(&restricted)
}
