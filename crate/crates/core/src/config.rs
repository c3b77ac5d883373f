//! JSON experiment configuration with dotted-path overrides.
//!
//! ```json
//! {
//!   "mdp": { "builtin": "boyan15" },
//!   "setting": { "kind": "discounted", "gamma": 0.9 },
//!   "lambda": 0.4,
//!   "schedule": { "alpha0": 0.01, "t0": 1e7, "xi": 1.0, "c_beta": 1.0 },
//!   "horizon": 1500000,
//!   "num_runs": 10
//! }
//! ```
//!
//! `mdp` may also be `{ "path": "other.json" }` (relative to the config file)
//! or an inline object with `transition`, `reward`, `features` and optionally
//! `initial_dist` and `policy`, all as nested numeric arrays.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::experiments::boyan::boyan_instance;
use crate::features::FeatureMatrix;
use crate::learners::LrSchedule;
use crate::linalg::{RankCutoff, DEFAULT_RANK_REL_TOL};
use crate::mdp::{Policy, TabularMdp};
use crate::oracle::{Instance, Setting};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MdpSpec {
    Builtin { builtin: String },
    File { path: PathBuf },
    Explicit(ExplicitMdp),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitMdp {
    /// `transition[s][a][s']`.
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `reward[s][a]`.
    pub reward: Vec<Vec<f64>>,
    /// One row per state.
    pub features: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_dist: Option<Vec<f64>>,
    /// `policy[s][a]`; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Vec<Vec<f64>>>,
}

impl ExplicitMdp {
    pub fn from_instance(inst: &Instance) -> Self {
        Self {
            transition: inst.mdp.transition_tensor(),
            reward: inst.mdp.reward_table().row_iter().map(|r| r.iter().copied().collect()).collect(),
            features: inst.features.to_rows(),
            initial_dist: Some(inst.mdp.initial_dist().iter().copied().collect()),
            policy: Some(inst.policy.to_rows()),
        }
    }

    pub fn to_instance(&self, cutoff: RankCutoff) -> Result<Instance> {
        let n = self.transition.len();
        let initial = self.initial_dist.clone().unwrap_or_else(|| vec![1.0 / n as f64; n]);
        let mdp = TabularMdp::new(self.transition.clone(), self.reward.clone(), initial)?;
        let policy = match &self.policy {
            Some(p) => Policy::new(p.clone())?,
            None => Policy::uniform(mdp.num_states(), mdp.num_actions()),
        };
        if self.features.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows for {n} states",
                self.features.len()
            )));
        }
        let features = FeatureMatrix::from_rows(&self.features)?;
        let features = FeatureMatrix::with_cutoff(features.matrix().clone(), cutoff)?;
        Ok(Instance { mdp, policy, features })
    }
}

/// Either `alpha` directly or `alpha0 = alpha / t0^xi`, the first step size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    pub t0: f64,
    #[serde(default = "one")]
    pub xi: f64,
    #[serde(default = "one")]
    pub c_beta: f64,
}

impl ScheduleSpec {
    pub fn resolve(&self) -> Result<LrSchedule> {
        match (self.alpha, self.alpha0) {
            (Some(a), None) => LrSchedule::new(a, self.t0, self.xi, self.c_beta),
            (None, Some(a0)) => LrSchedule::from_initial_step(a0, self.t0, self.xi, self.c_beta),
            _ => Err(Error::Config("schedule needs exactly one of alpha, alpha0".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Stationary samples per Monte Carlo mean-field check.
    #[serde(default = "default_mc_steps")]
    pub mc_steps: usize,
    #[serde(default = "default_mc_points")]
    pub mc_points: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    /// Allowed deviation in standard errors.
    #[serde(default = "default_z")]
    pub max_z: f64,
    #[serde(default = "default_probe_points")]
    pub probe_points: usize,
    #[serde(default = "default_c_beta_grid")]
    pub c_beta_grid: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        serde_json::from_value(Value::Object(Default::default())).expect("all fields default")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mdp: MdpSpec,
    pub setting: Setting,
    pub lambda: f64,
    pub schedule: ScheduleSpec,
    pub horizon: u64,
    /// Number of runs; defaults to the number of `seeds`, or 10.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_runs: Option<usize>,
    /// Explicit seeds; `0..num_runs` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    /// Approximate number of geometric checkpoints.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    /// Relative singular-value cutoff for every rank decision.
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
    /// Overrides the MDP's initial distribution for the runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_dist: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub verify: VerifyConfig,
}

const DEFAULT_NUM_RUNS: usize = 10;

fn one() -> f64 {
    1.0
}
fn default_mc_steps() -> usize {
    1_000_000
}
fn default_mc_points() -> usize {
    5
}
fn default_burn_in() -> usize {
    10_000
}
fn default_batches() -> usize {
    50
}
fn default_z() -> f64 {
    3.0
}
fn default_probe_points() -> usize {
    100
}
fn default_c_beta_grid() -> Vec<f64> {
    vec![0.01, 0.1, 1.0, 10.0, 100.0, 1000.0]
}
fn default_checkpoints() -> usize {
    200
}
fn default_rank_tol() -> f64 {
    DEFAULT_RANK_REL_TOL
}

impl ExperimentConfig {
    /// Boyan chain, effective first step 0.01, `t0 = 1e7`, `ξ = 1`, 10 runs of
    /// 1.5e6 steps.
    pub fn boyan(setting: Setting, lambda: f64) -> Self {
        Self {
            mdp: MdpSpec::Builtin {
                builtin: "boyan15".into(),
            },
            setting,
            lambda,
            schedule: ScheduleSpec {
                alpha: None,
                alpha0: Some(0.01),
                t0: 1e7,
                xi: 1.0,
                c_beta: 1.0,
            },
            horizon: 1_500_000,
            num_runs: None,
            seeds: None,
            checkpoints: default_checkpoints(),
            rank_tol: default_rank_tol(),
            initial_dist: None,
            output: None,
            verify: VerifyConfig::default(),
        }
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let cfg: Self = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses `path`, applies `overrides` (`key.path=value`) and resolves a
    /// relative `mdp.path` against the config's directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut v: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        apply_overrides(&mut v, overrides)?;
        let mut cfg = Self::from_value(v)?;
        if let MdpSpec::File { path: p } = &mut cfg.mdp {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let seeds = self.seeds();
        if seeds.is_empty() {
            return Err(Error::Config("need at least one run".into()));
        }
        if let Some(s) = &self.seeds {
            if let Some(n) = self.num_runs.filter(|&n| n != s.len()) {
                return Err(Error::Config(format!("num_runs = {n} but {} seeds given", s.len())));
            }
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda = {} outside [0, 1]", self.lambda)));
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(Error::Config("rank_tol must lie in (0, 1)".into()));
        }
        self.schedule.resolve()?;
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.seeds
            .clone()
            .unwrap_or_else(|| (0..self.num_runs.unwrap_or(DEFAULT_NUM_RUNS) as u64).collect())
    }

    pub fn lr_schedule(&self) -> Result<LrSchedule> {
        self.schedule.resolve()
    }

    pub fn cutoff(&self) -> RankCutoff {
        RankCutoff::new(self.rank_tol)
    }

    pub fn instance(&self) -> Result<Instance> {
        match &self.mdp {
            MdpSpec::Builtin { builtin } if builtin == "boyan15" => {
                let inst = boyan_instance();
                let features = FeatureMatrix::with_cutoff(inst.features.matrix().clone(), self.cutoff())?;
                Ok(Instance { features, ..inst })
            }
            MdpSpec::Builtin { builtin } => Err(Error::Config(format!("unknown builtin mdp {builtin:?}"))),
            MdpSpec::File { path } => {
                let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let spec: ExplicitMdp = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                spec.to_instance(self.cutoff())
            }
            MdpSpec::Explicit(spec) => spec.to_instance(self.cutoff()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Sets `a.b.c=value` inside `root`. The value is parsed as JSON when it can
/// be and used as a string otherwise; numeric path segments index arrays.
pub fn apply_overrides(root: &mut Value, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
        if key.is_empty() {
            return Err(Error::Config(format!("override {o:?} has an empty key")));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut cur = &mut *root;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let last = i + 1 == parts.len();
            cur = match cur {
                Value::Array(items) => {
                    let idx: usize = part
                        .parse()
                        .map_err(|_| Error::Config(format!("override {key}: {part:?} is not an index")))?;
                    items
                        .get_mut(idx)
                        .ok_or_else(|| Error::Config(format!("override {key}: index {idx} out of range")))?
                }
                Value::Object(map) => map.entry(part.to_string()).or_insert(Value::Null),
                other => {
                    if other.is_null() {
                        *other = Value::Object(Default::default());
                        other.as_object_mut().expect("just set").entry(part.to_string()).or_insert(Value::Null)
                    } else {
                        return Err(Error::Config(format!("override {key}: cannot descend into {other}")));
                    }
                }
            };
            if last {
                *cur = value.clone();
            }
        }
    }
    Ok(())
}
