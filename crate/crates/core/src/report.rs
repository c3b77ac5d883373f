//! Plain-text and JSON summaries of an [`Analysis`].

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::oracle::{c_beta_sweep, Analysis, Setting};
use crate::sa::mixing_time;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub setting: Setting,
    pub lambda: f64,
    pub num_states: usize,
    pub dim: usize,
    pub rank_x: usize,
    pub rank_x1: usize,
    pub one_in_col_x: bool,
    /// Dimension of the solution set, i.e. of `ker(A)` or `ker(Ā)`.
    pub solution_dim: usize,
    /// Margin of `A` (or `Ā`) on the complement of its kernel.
    pub margin: f64,
    pub consistency_residual: f64,
    pub decomposition_error: f64,
    /// Minimal-norm member of the solution set.
    pub particular: Vec<f64>,
    /// `X w*`, the same for every member of the solution set.
    pub value_estimate: Vec<f64>,
    pub stationary: Vec<f64>,
    pub avg_reward: f64,
    /// Average-reward only: `c_β` used for the combined system and its margin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilde_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub c_beta_sweep: Vec<(f64, f64)>,
    /// Steps until every row of `Pⁿ` is within 0.01 of `d` in total variation.
    pub mixing_time: Option<usize>,
}

impl OracleReport {
    pub fn new(a: &Analysis, c_beta_grid: &[f64]) -> Result<Self> {
        let dec = &a.decomposition;
        let check = dec.check(&a.features);
        let (c_beta, tilde_margin, sweep) = match &a.tilde {
            Some(t) => (
                Some(t.c_beta),
                Some(t.margin()),
                c_beta_sweep(&a.system, dec, &a.chain, &a.features, a.lambda, c_beta_grid)?,
            ),
            None => (None, None, Vec::new()),
        };
        Ok(Self {
            setting: a.setting,
            lambda: a.lambda,
            num_states: a.chain.num_states(),
            dim: a.dim(),
            rank_x: dec.rank_x,
            rank_x1: dec.rank_x1,
            one_in_col_x: dec.one_in_col_x,
            solution_dim: a.solution.dim(),
            margin: a.margin(),
            consistency_residual: a.consistency_residual(),
            decomposition_error: check.reconstruction_error,
            particular: a.solution.particular().iter().copied().collect(),
            value_estimate: a.value_estimate().iter().copied().collect(),
            stationary: a.chain.d.iter().copied().collect(),
            avg_reward: a.chain.avg_reward,
            c_beta,
            tilde_margin,
            c_beta_sweep: sweep,
            mixing_time: mixing_time(&a.chain.p, 0.01).ok(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let setting = match self.setting {
            Setting::Discounted { gamma } => format!("discounted, gamma = {gamma}"),
            Setting::AverageReward => "average reward".to_string(),
        };
        let _ = writeln!(s, "setting            {setting}, lambda = {}", self.lambda);
        let _ = writeln!(s, "states x features  {} x {}", self.num_states, self.dim);
        let _ = writeln!(s, "rank(X)            {}", self.rank_x);
        let _ = writeln!(s, "rank(X1)           {}", self.rank_x1);
        let _ = writeln!(s, "ones in col(X)     {}", self.one_in_col_x);
        let _ = writeln!(s, "dim of W*          {}", self.solution_dim);
        let _ = writeln!(s, "n.d. margin        {:.6e}", self.margin);
        if let (Some(c), Some(m)) = (self.c_beta, self.tilde_margin) {
            let _ = writeln!(s, "combined margin    {m:.6e} (c_beta = {c})");
            for (c, m) in &self.c_beta_sweep {
                let _ = writeln!(s, "  c_beta = {c:<8} margin {m:.6e}");
            }
        }
        let _ = writeln!(s, "consistency resid  {:.3e}", self.consistency_residual);
        let _ = writeln!(s, "decomposition err  {:.3e}", self.decomposition_error);
        let _ = writeln!(s, "average reward     {}", self.avg_reward);
        match self.mixing_time {
            Some(n) => {
                let _ = writeln!(s, "mixing time (0.01) {n}");
            }
            None => {
                let _ = writeln!(s, "mixing time (0.01) not reached");
            }
        }
        let _ = writeln!(s, "W* particular      {}", fmt_vec(&self.particular));
        let _ = writeln!(s, "value estimate     {}", fmt_vec(&self.value_estimate));
        s
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}
