//! Combined-parameter view of average-reward TD(λ).
//!
//! Tracking `w̃ = [Ĵ; Π w]` turns the two coupled recursions into a single
//! linear stochastic approximation `w̃ ← w̃ + α_t (Ã(y) w̃ + b̃(y))` whose mean
//! field is
//!
//! ```text
//! Ã = [ -c_β       0   ]      b̃ = [ c_β J            ]
//!     [ -Π E[e]   Π Ā  ]           [ Π E[e] J + Π b̄  ]
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::mdp::PolicyChain;
use crate::oracle::affine::{neg_def_margin, AffineSet};
use crate::oracle::decomposition::FeatureDecomposition;
use crate::oracle::operators::TdSystem;

#[derive(Clone, Debug)]
pub struct TildeSystem {
    pub a_tilde: DMatrix<f64>,
    pub b_tilde: DVector<f64>,
    pub c_beta: f64,
    /// Projector onto `ker(X₁)^⊥`.
    pub pi: DMatrix<f64>,
    /// Stationary mean of the eligibility trace.
    pub trace_mean: DVector<f64>,
    pub avg_reward: f64,
    /// Orthonormal basis of `ker(X₁)^⊥`.
    row_space_x1: DMatrix<f64>,
}

/// `E[e] = Xᵀ d / (1 - decay)` for a trace decaying by `decay` per step.
pub fn stationary_trace_mean(x: &FeatureMatrix, chain: &PolicyChain, decay: f64) -> DVector<f64> {
    x.matrix().transpose() * &chain.d / (1.0 - decay)
}

pub fn tilde_system(
    ar: &TdSystem,
    decomp: &FeatureDecomposition,
    chain: &PolicyChain,
    x: &FeatureMatrix,
    lambda: f64,
    c_beta: f64,
) -> Result<TildeSystem> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidLambda { gamma: 1.0, lambda });
    }
    if !(c_beta > 0.0) {
        return Err(Error::Config(format!("c_beta must be positive, got {c_beta}")));
    }
    let d = ar.dim();
    if x.dim() != d || decomp.x1.ncols() != d {
        return Err(Error::DimensionMismatch("tilde system inputs".into()));
    }
    let pi = decomp.projector();
    let trace_mean = stationary_trace_mean(x, chain, lambda);
    let pi_q = &pi * &trace_mean;
    let j = chain.avg_reward;

    let mut a_tilde = DMatrix::zeros(d + 1, d + 1);
    a_tilde[(0, 0)] = -c_beta;
    a_tilde.view_mut((1, 0), (d, 1)).copy_from(&(-&pi_q));
    a_tilde.view_mut((1, 1), (d, d)).copy_from(&(&pi * &ar.a));

    let mut b_tilde = DVector::zeros(d + 1);
    b_tilde[0] = c_beta * j;
    b_tilde.rows_mut(1, d).copy_from(&(&pi_q * j + &pi * &ar.b));

    Ok(TildeSystem {
        a_tilde,
        b_tilde,
        c_beta,
        pi,
        trace_mean,
        avg_reward: j,
        row_space_x1: decomp.row_space_x1(),
    })
}

impl TildeSystem {
    pub fn dim(&self) -> usize {
        self.b_tilde.len()
    }

    /// `w̃ = [Ĵ; Π w]`.
    pub fn combine(&self, j_hat: f64, w: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(w.len() + 1);
        out[0] = j_hat;
        out.rows_mut(1, w.len()).copy_from(&(&self.pi * w));
        out
    }

    /// The singleton `W̃* = {[J; Π w̄*]}` for any `w̄*` in `ar_set`.
    pub fn solution(&self, ar_set: &AffineSet) -> AffineSet {
        AffineSet::point(self.combine(self.avg_reward, ar_set.particular()))
    }

    /// Orthonormal basis of `R × ker(X₁)^⊥` inside `R^{1+d}`.
    pub fn subspace_basis(&self) -> DMatrix<f64> {
        let d = self.dim() - 1;
        let r = self.row_space_x1.ncols();
        let mut b = DMatrix::zeros(d + 1, r + 1);
        b[(0, 0)] = 1.0;
        b.view_mut((1, 1), (d, r)).copy_from(&self.row_space_x1);
        b
    }

    /// Margin of `Ã` on `R × ker(X₁)^⊥`.
    pub fn margin(&self) -> f64 {
        neg_def_margin(&self.a_tilde, &self.subspace_basis())
    }

    pub fn mean_field(&self, w_tilde: &DVector<f64>) -> DVector<f64> {
        &self.a_tilde * w_tilde + &self.b_tilde
    }
}

/// Margin of `Ã` for each `c_β` in `grid`, in grid order.
pub fn c_beta_sweep(
    ar: &TdSystem,
    decomp: &FeatureDecomposition,
    chain: &PolicyChain,
    x: &FeatureMatrix,
    lambda: f64,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    grid.iter()
        .map(|&c| Ok((c, tilde_system(ar, decomp, chain, x, lambda, c)?.margin())))
        .collect()
}
