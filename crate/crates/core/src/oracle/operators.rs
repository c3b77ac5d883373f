//! λ-weighted Bellman operators and the `(A, b)` / `(Ā, b̄)` systems whose
//! solution sets the learners converge to.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::{max_abs, pseudo_inverse_scaled, spectral_norm, RankCutoff};
use crate::mdp::PolicyChain;
use crate::oracle::decomposition::feature_decomposition;

const IDENTITY_TOL: f64 = 1e-10;
const CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Setting {
    Discounted { gamma: f64 },
    AverageReward,
}

impl Setting {
    /// Discount used inside the λ-operators (1 for average reward).
    pub fn gamma(&self) -> f64 {
        match *self {
            Setting::Discounted { gamma } => gamma,
            Setting::AverageReward => 1.0,
        }
    }

    pub fn is_average_reward(&self) -> bool {
        matches!(self, Setting::AverageReward)
    }
}

/// `P_λ = (1-λ)(I - γλP)^{-1} P` and `r_λ = (I - γλP)^{-1} r`.
#[derive(Clone, Debug)]
pub struct LambdaOperators {
    pub p_lambda: DMatrix<f64>,
    pub r_lambda: DVector<f64>,
    pub gamma: f64,
    pub lambda: f64,
}

pub fn validate_trace_decay(gamma: f64, lambda: f64) -> Result<()> {
    let ok = (0.0..=1.0).contains(&gamma) && (0.0..=1.0).contains(&lambda) && gamma * lambda < 1.0;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidLambda { gamma, lambda })
    }
}

/// Closed forms of the λ-operators. Pass `gamma = 1` for the average-reward setting.
pub fn lambda_operators(chain: &PolicyChain, gamma: f64, lambda: f64) -> Result<LambdaOperators> {
    validate_trace_decay(gamma, lambda)?;
    let n = chain.num_states();
    let m = DMatrix::identity(n, n) - &chain.p * (gamma * lambda);
    let lu = m.lu();
    let singular = || Error::SingularSystem("I - gamma*lambda*P_pi".into());
    let r_lambda = lu.solve(&chain.r).ok_or_else(singular)?;
    let p_lambda = lu.solve(&chain.p).ok_or_else(singular)? * (1.0 - lambda);
    Ok(LambdaOperators {
        p_lambda,
        r_lambda,
        gamma,
        lambda,
    })
}

/// Linear system `A w + b = 0` of one of the two TD variants.
#[derive(Clone, Debug)]
pub struct TdSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub setting: Setting,
    /// `|X^T D X|`, the size `A` would have without cancellation. Rank
    /// decisions on `A` are made relative to at least this.
    pub scale: f64,
}

impl TdSystem {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Mean update `h(w) = A w + b`.
    pub fn mean_field(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.a * w + &self.b
    }
}

fn check_dims(chain: &PolicyChain, x: &FeatureMatrix) -> Result<()> {
    if x.num_states() != chain.num_states() {
        return Err(Error::DimensionMismatch(format!(
            "features have {} rows, chain has {} states",
            x.num_states(),
            chain.num_states()
        )));
    }
    Ok(())
}

/// `A = X^T D (γ P_λ - I) X`, `b = X^T D r_λ`.
pub fn td_matrices(ops: &LambdaOperators, chain: &PolicyChain, x: &FeatureMatrix, gamma: f64) -> Result<TdSystem> {
    check_dims(chain, x)?;
    let n = chain.num_states();
    let xm = x.matrix();
    let xtd = xm.transpose() * chain.d_matrix();
    let inner = &ops.p_lambda * gamma - DMatrix::identity(n, n);
    Ok(TdSystem {
        a: &xtd * inner * xm,
        b: &xtd * &ops.r_lambda,
        setting: Setting::Discounted { gamma },
        scale: spectral_norm(&(&xtd * xm)),
    })
}

fn ar_parts(ops: &LambdaOperators, chain: &PolicyChain, x: &DMatrix<f64>, lambda: f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = chain.num_states();
    let xtd = x.transpose() * chain.d_matrix();
    let centred = &ops.r_lambda - DVector::from_element(n, chain.avg_reward / (1.0 - lambda));
    (&xtd * (&ops.p_lambda - DMatrix::identity(n, n)) * x, &xtd * centred)
}

/// Largest entry of `|Ā(X) - Ā(X₁)|` and `|b̄(X) - b̄(X₁)|`, relative to
/// `max(1, max|Ā|)`. Zero in exact arithmetic.
pub fn x1_substitution_gap(
    ops: &LambdaOperators,
    chain: &PolicyChain,
    x: &FeatureMatrix,
    x1: &DMatrix<f64>,
    lambda: f64,
) -> f64 {
    let (a, b) = ar_parts(ops, chain, x.matrix(), lambda);
    let (a1, b1) = ar_parts(ops, chain, x1, lambda);
    max_abs(&(&a - a1)).max((&b - b1).amax()) / max_abs(&a).max(1.0)
}

/// `Ā = X^T D (P_λ - I) X`, `b̄ = X^T D (r_λ - J/(1-λ) 1)`.
///
/// Also checks that `X` may be replaced by `X₁` from the feature
/// decomposition without changing `(Ā, b̄)`, and that `Ā w = -b̄` is solvable.
pub fn ar_matrices(ops: &LambdaOperators, chain: &PolicyChain, x: &FeatureMatrix, lambda: f64) -> Result<TdSystem> {
    check_dims(chain, x)?;
    if !(0.0..1.0).contains(&lambda) || ops.gamma != 1.0 || ops.lambda != lambda {
        return Err(Error::InvalidLambda { gamma: ops.gamma, lambda });
    }
    let (a, b) = ar_parts(ops, chain, x.matrix(), lambda);

    if x.rank() > 0 {
        let decomp = feature_decomposition(x, RankCutoff::default())?;
        let gap = x1_substitution_gap(ops, chain, x, &decomp.x1, lambda);
        if gap > IDENTITY_TOL {
            return Err(Error::LemmaViolation {
                lemma: "Ā = X₁ᵀD(P_λ-I)X₁",
                detail: format!("relative deviation {gap:e}"),
            });
        }
    }

    let xm = x.matrix();
    let scale = spectral_norm(&(xm.transpose() * chain.d_matrix() * xm));
    let w = pseudo_inverse_scaled(&a, RankCutoff::default(), scale) * (-&b);
    let residual = (&a * w + &b).norm();
    if residual > CONSISTENCY_TOL {
        return Err(Error::InconsistentSystem { residual });
    }
    Ok(TdSystem {
        a,
        b,
        setting: Setting::AverageReward,
        scale,
    })
}

/// Convenience: λ-operators plus the system for `setting`.
pub fn build_system(chain: &PolicyChain, x: &FeatureMatrix, setting: Setting, lambda: f64) -> Result<TdSystem> {
    match setting {
        Setting::Discounted { gamma } => {
            if !(0.0..1.0).contains(&gamma) {
                return Err(Error::InvalidLambda { gamma, lambda });
            }
            let ops = lambda_operators(chain, gamma, lambda)?;
            td_matrices(&ops, chain, x, gamma)
        }
        Setting::AverageReward => {
            let ops = lambda_operators(chain, 1.0, lambda)?;
            ar_matrices(&ops, chain, x, lambda)
        }
    }
}
