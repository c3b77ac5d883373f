//! Linear TD(λ) with arbitrary, possibly rank-deficient, features.
//!
//! The crate has three layers:
//!
//! - [`oracle`] computes the exact objects behind the algorithm for a finite
//!   Markov chain: λ-operators, the TD linear systems, their solution sets,
//!   the feature decomposition used in the average-reward setting and
//!   negative-definiteness margins.
//! - [`learners`] and [`sa`] run the stochastic recursions, either as
//!   dedicated TD(λ) learners or through a generic Markovian stochastic
//!   approximation driver.
//! - [`experiments`] ties them together: Monte Carlo runs that measure the
//!   distance to the solution set over time, CSV output and rate fits.
//!
//! Tabular MDPs, policies and feature matrices live in [`mdp`] and
//! [`features`].

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod features;
pub mod learners;
pub mod linalg;
pub mod mdp;
pub mod oracle;
pub mod report;
pub mod sa;
pub mod verify;

pub use error::{Error, Result};
pub use features::FeatureMatrix;
pub use learners::{AverageRewardTd, DiscountedTd, LearnerState, LrSchedule};
pub use mdp::{PolicyChain, Policy, TabularMdp, Transition, TrajectorySampler};
pub use oracle::{AffineSet, FeatureDecomposition, Setting, TdSystem};
