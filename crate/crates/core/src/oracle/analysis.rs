use nalgebra::DVector;

use crate::error::Result;
use crate::features::FeatureMatrix;
use crate::linalg::{orthogonal_complement, RankCutoff};
use crate::mdp::{induce_chain, Policy, PolicyChain, TabularMdp};
use crate::oracle::affine::{ar_solution_set, neg_def_margin, solution_set, AffineSet};
use crate::oracle::decomposition::{feature_decomposition, FeatureDecomposition};
use crate::oracle::operators::{build_system, Setting, TdSystem};
use crate::oracle::tilde::{tilde_system, TildeSystem};

/// An MDP, the evaluated policy and the features.
#[derive(Clone, Debug)]
pub struct Instance {
    pub mdp: TabularMdp,
    pub policy: Policy,
    pub features: FeatureMatrix,
}

/// Everything the oracle knows about one `(instance, setting, λ)` triple.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub chain: PolicyChain,
    pub setting: Setting,
    pub lambda: f64,
    pub system: TdSystem,
    /// `W*` (discounted) or `W̄*` (average reward). In the average-reward case
    /// the directions are taken from `ker(X₁)` once they have been checked to
    /// coincide with `ker(Ā)`.
    pub solution: AffineSet,
    pub decomposition: FeatureDecomposition,
    /// Present in the average-reward setting only.
    pub tilde: Option<TildeSystem>,
    pub features: FeatureMatrix,
}

impl Analysis {
    pub fn new(inst: &Instance, setting: Setting, lambda: f64, c_beta: f64, cutoff: RankCutoff) -> Result<Self> {
        let chain = induce_chain(&inst.mdp, &inst.policy)?;
        Self::from_chain(chain, &inst.features, setting, lambda, c_beta, cutoff)
    }

    pub fn from_chain(
        chain: PolicyChain,
        x: &FeatureMatrix,
        setting: Setting,
        lambda: f64,
        c_beta: f64,
        cutoff: RankCutoff,
    ) -> Result<Self> {
        let decomposition = feature_decomposition(x, cutoff)?;
        let system = build_system(&chain, x, setting, lambda)?;
        let (solution, tilde) = match setting {
            Setting::Discounted { .. } => (solution_set(&system, cutoff)?, None),
            Setting::AverageReward => {
                let set = ar_solution_set(&system, &decomposition, cutoff)?;
                let set = AffineSet::new(set.particular().clone(), decomposition.kernel_x1())?;
                let tilde = tilde_system(&system, &decomposition, &chain, x, lambda, c_beta)?;
                (set, Some(tilde))
            }
        };
        Ok(Self {
            chain,
            setting,
            lambda,
            system,
            solution,
            decomposition,
            tilde,
            features: x.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// Margin of `A` (or `Ā`) on the orthogonal complement of the solution
    /// directions.
    pub fn margin(&self) -> f64 {
        let basis = orthogonal_complement(self.solution.basis(), self.dim());
        neg_def_margin(&self.system.a, &basis)
    }

    /// `‖A w* + b‖` at the reported particular solution.
    pub fn consistency_residual(&self) -> f64 {
        self.system.mean_field(self.solution.particular()).norm()
    }

    /// `X w*`, identical for every member of the solution set.
    pub fn value_estimate(&self) -> DVector<f64> {
        self.features.matrix() * self.solution.particular()
    }

    pub fn distance_sq(&self, w: &DVector<f64>) -> f64 {
        self.solution.distance_sq(w)
    }

    /// `d(w̃, W̃*)²` for `w̃ = [Ĵ; Π w]`; `None` in the discounted setting.
    pub fn combined_distance_sq(&self, j_hat: f64, w: &DVector<f64>) -> Option<f64> {
        let tilde = self.tilde.as_ref()?;
        let target = tilde.combine(tilde.avg_reward, self.solution.particular());
        Some((tilde.combine(j_hat, w) - target).norm_squared())
    }
}
