//! Exact theoretical objects: λ-operators, TD systems, the feature
//! decomposition, solution sets with their projections, negative-definiteness
//! margins and the combined average-reward system.

pub mod affine;
pub mod analysis;
pub mod decomposition;
pub mod operators;
pub mod tilde;

pub use affine::{ar_solution_set, neg_def_margin, solution_set, AffineSet};
pub use analysis::{Analysis, Instance};
pub use decomposition::{feature_decomposition, ones_fit_residual, DecompositionCheck, FeatureDecomposition};
pub use operators::{
    ar_matrices, build_system, lambda_operators, td_matrices, x1_substitution_gap, LambdaOperators, Setting, TdSystem,
};
pub use tilde::{c_beta_sweep, stationary_trace_mean, tilde_system, TildeSystem};
