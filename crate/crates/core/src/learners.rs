//! Linear TD(λ) in the discounted and average-reward settings, exactly as the
//! recursions are written: no projection, clipping or averaging.
//!
//! Conventions fixed here:
//! - the trace is updated first, `e_t = decay * e_{t-1} + x(S_t)`, and the
//!   weight update uses that `e_t`;
//! - `α_t` and `β_t` are evaluated at the step count of the pre-update state;
//! - the `Ĵ` update uses the pre-update `Ĵ_t`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::dot;
use crate::mdp::Transition;
use crate::oracle::operators::validate_trace_decay;

/// `α_t = α / (t + t₀)^ξ`, `β_t = c_β α_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub alpha: f64,
    pub t0: f64,
    pub xi: f64,
    #[serde(default = "default_c_beta")]
    pub c_beta: f64,
}

fn default_c_beta() -> f64 {
    1.0
}

impl LrSchedule {
    pub fn new(alpha: f64, t0: f64, xi: f64, c_beta: f64) -> Result<Self> {
        let s = Self { alpha, t0, xi, c_beta };
        s.validate()?;
        Ok(s)
    }

    /// Schedule whose first step size is `alpha0`, i.e. `α = alpha0 · t₀^ξ`.
    pub fn from_initial_step(alpha0: f64, t0: f64, xi: f64, c_beta: f64) -> Result<Self> {
        Self::new(alpha0 * t0.powf(xi), t0, xi, c_beta)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("learning-rate schedule: {what}")));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return bad("t0 must be positive");
        }
        if !(self.xi > 0.5 && self.xi <= 1.0) {
            return bad("xi must lie in (0.5, 1]");
        }
        if !(self.c_beta > 0.0 && self.c_beta.is_finite()) {
            return bad("c_beta must be positive");
        }
        Ok(())
    }

    #[inline]
    pub fn alpha_at(&self, t: u64) -> f64 {
        self.alpha / (t as f64 + self.t0).powf(self.xi)
    }

    /// `(α_t, β_t)`.
    #[inline]
    pub fn at(&self, t: u64) -> (f64, f64) {
        let a = self.alpha_at(t);
        (a, self.c_beta * a)
    }

    /// `α_0`, the first step size.
    pub fn initial_step(&self) -> f64 {
        self.alpha_at(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    pub w: DVector<f64>,
    pub e: DVector<f64>,
    /// Average-reward estimate; stays at its initial value for discounted TD.
    pub j_hat: f64,
    pub t: u64,
}

impl LearnerState {
    /// `w₀ = 0`, `e_{-1} = 0`, `Ĵ₀ = 0`.
    pub fn zeros(dim: usize) -> Self {
        Self::new(DVector::zeros(dim), 0.0)
    }

    pub fn new(w: DVector<f64>, j_hat: f64) -> Self {
        let d = w.len();
        Self {
            w,
            e: DVector::zeros(d),
            j_hat,
            t: 0,
        }
    }
}

fn non_finite(t: u64, state: &LearnerState, delta: f64) -> Error {
    Error::NonFiniteUpdate {
        t,
        detail: format!("td error {delta}, |w| = {}, j_hat = {}", state.w.norm(), state.j_hat),
    }
}

/// Discounted TD(λ): `w += α_t (R + γ x(S')ᵀw - x(S)ᵀw) e_t`, `e_t = γλ e_{t-1} + x(S)`.
#[derive(Clone, Debug)]
pub struct DiscountedTd<'a> {
    features: &'a FeatureMatrix,
    gamma: f64,
    decay: f64,
    schedule: LrSchedule,
    trace_bound: f64,
}

impl<'a> DiscountedTd<'a> {
    pub fn new(features: &'a FeatureMatrix, gamma: f64, lambda: f64, schedule: LrSchedule) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidLambda { gamma, lambda });
        }
        validate_trace_decay(gamma, lambda)?;
        schedule.validate()?;
        let decay = gamma * lambda;
        Ok(Self {
            features,
            gamma,
            decay,
            schedule,
            trace_bound: features.max_row_norm() / (1.0 - decay),
        })
    }

    /// `max_s |x(s)| / (1 - γλ)`.
    pub fn trace_bound(&self) -> f64 {
        self.trace_bound
    }

    pub fn step(&self, state: &mut LearnerState, tr: &Transition) -> Result<()> {
        let x = self.features.row(tr.state);
        let x_next = self.features.row(tr.next_state);
        let alpha = self.schedule.alpha_at(state.t);
        let e = state.e.as_mut_slice();
        for (ei, xi) in e.iter_mut().zip(x) {
            *ei = self.decay * *ei + xi;
        }
        debug_assert!(state.e.norm() <= self.trace_bound + 1e-9, "trace bound violated");
        let w = state.w.as_mut_slice();
        let delta = tr.reward + self.gamma * dot(x_next, w) - dot(x, w);
        for (wi, ei) in w.iter_mut().zip(state.e.iter()) {
            *wi += alpha * (delta * ei);
        }
        if !delta.is_finite() || state.w.iter().any(|v| !v.is_finite()) {
            return Err(non_finite(state.t, state, delta));
        }
        state.t += 1;
        Ok(())
    }
}

/// Average-reward TD(λ):
/// `w += α_t (R - Ĵ + x(S')ᵀw - x(S)ᵀw) e_t`, `Ĵ += β_t (R - Ĵ)`, `e_t = λ e_{t-1} + x(S)`.
#[derive(Clone, Debug)]
pub struct AverageRewardTd<'a> {
    features: &'a FeatureMatrix,
    lambda: f64,
    schedule: LrSchedule,
    trace_bound: f64,
}

impl<'a> AverageRewardTd<'a> {
    pub fn new(features: &'a FeatureMatrix, lambda: f64, schedule: LrSchedule) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidLambda { gamma: 1.0, lambda });
        }
        schedule.validate()?;
        Ok(Self {
            features,
            lambda,
            schedule,
            trace_bound: features.max_row_norm() / (1.0 - lambda),
        })
    }

    /// `max_s |x(s)| / (1 - λ)`.
    pub fn trace_bound(&self) -> f64 {
        self.trace_bound
    }

    pub fn step(&self, state: &mut LearnerState, tr: &Transition) -> Result<()> {
        let x = self.features.row(tr.state);
        let x_next = self.features.row(tr.next_state);
        let (alpha, beta) = self.schedule.at(state.t);
        let e = state.e.as_mut_slice();
        for (ei, xi) in e.iter_mut().zip(x) {
            *ei = self.lambda * *ei + xi;
        }
        debug_assert!(state.e.norm() <= self.trace_bound + 1e-9, "trace bound violated");
        let j = state.j_hat;
        let w = state.w.as_mut_slice();
        let delta = tr.reward - j + dot(x_next, w) - dot(x, w);
        for (wi, ei) in w.iter_mut().zip(state.e.iter()) {
            *wi += alpha * (delta * ei);
        }
        state.j_hat = j + beta * (tr.reward - j);
        if !delta.is_finite() || !state.j_hat.is_finite() || state.w.iter().any(|v| !v.is_finite()) {
            return Err(non_finite(state.t, state, delta));
        }
        state.t += 1;
        Ok(())
    }
}
