//! Multi-seed TD(λ) runs that track the distance to the solution set.

pub mod boyan;
pub mod fit;
pub mod record;

use std::collections::BTreeSet;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::learners::{AverageRewardTd, DiscountedTd, LearnerState, LrSchedule};
use crate::mdp::{Transition, TrajectorySampler};
use crate::oracle::{Analysis, Instance, Setting};
use crate::report::OracleReport;
use crate::sa::{par_map_seeds, seeded_rng};

pub use boyan::{boyan_chain, boyan_instance};
pub use fit::{fit_loglog, rate_fit, RateFit};
pub use record::{csv_string, parse_csv, read_csv, write_csv, write_outputs};

/// `(Ĵ - J)² + d(w, W̄*)²` and `d(w̃, W̃*)²` may differ by at most this
/// times `max(1, value)`.
pub const COMBINED_IDENTITY_TOL: f64 = 1e-10;

/// `0`, the horizon, every power of ten below it and about `target` points
/// spaced geometrically in between.
pub fn checkpoint_grid(horizon: u64, target: usize) -> Vec<u64> {
    let mut set = BTreeSet::from([0, horizon]);
    let mut p = 1u64;
    while p <= horizon {
        set.insert(p);
        match p.checked_mul(10) {
            Some(q) => p = q,
            None => break,
        }
    }
    if horizon >= 1 && target >= 2 {
        let top = (horizon as f64).ln();
        for i in 0..target {
            let t = (top * i as f64 / (target - 1) as f64).exp().round() as u64;
            set.insert(t.clamp(1, horizon));
        }
    }
    set.into_iter().collect()
}

/// Average-reward series at each checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageRewardSeries {
    pub mean_j2: Vec<f64>,
    pub stderr_j2: Vec<f64>,
    pub mean_combined: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config: ExperimentConfig,
    pub oracle: OracleReport,
    pub seeds: Vec<u64>,
    pub config_hash: String,
    /// Final weights, one row per seed.
    pub final_w: Vec<Vec<f64>>,
    /// Final `Ĵ` per seed; zeros in the discounted setting.
    pub final_j_hat: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub t: Vec<u64>,
    pub mean_d2: Vec<f64>,
    pub stderr_d2: Vec<f64>,
    pub average: Option<AverageRewardSeries>,
    /// Absent when the record was read back from CSV.
    pub meta: Option<RunMeta>,
}

impl RunRecord {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Mean `d²` at checkpoint `t`, if recorded.
    pub fn mean_d2_at(&self, t: u64) -> Option<f64> {
        self.t.iter().position(|&x| x == t).map(|i| self.mean_d2[i])
    }
}

/// Per-seed measurements at the checkpoints.
#[derive(Clone, Debug)]
pub struct SeedTrace {
    pub seed: u64,
    pub d2: Vec<f64>,
    /// `(Ĵ - J)²`; empty for discounted runs.
    pub j2: Vec<f64>,
    pub combined: Vec<f64>,
    pub final_state: LearnerState,
}

/// Drives `step` along one sampled trajectory of length
/// `checkpoints.last()`, calling `observe` whenever the step count hits a
/// checkpoint (sorted, possibly starting at 0).
fn simulate(
    sampler: &TrajectorySampler,
    checkpoints: &[u64],
    seed: u64,
    dim: usize,
    step: impl Fn(&mut LearnerState, &Transition) -> Result<()>,
    mut observe: impl FnMut(&LearnerState) -> Result<()>,
) -> Result<LearnerState> {
    let horizon = checkpoints.last().copied().unwrap_or(0);
    let mut rng = seeded_rng(seed);
    let mut st = LearnerState::zeros(dim);
    let mut next = checkpoints.iter().copied().peekable();
    let mut s = sampler.initial_state(&mut rng);
    while next.next_if_eq(&0).is_some() {
        observe(&st)?;
    }
    for t in 1..=horizon {
        let tr = sampler.step(s, &mut rng);
        step(&mut st, &tr).map_err(|e| match e {
            Error::NonFiniteUpdate { t, detail } => Error::NonFiniteUpdate {
                t,
                detail: format!("seed {seed}: {detail}"),
            },
            other => other,
        })?;
        s = tr.next_state;
        while next.next_if_eq(&t).is_some() {
            observe(&st)?;
        }
    }
    Ok(st)
}

/// Runs one trajectory from `w₀ = 0`, `Ĵ₀ = 0` and records the distances at
/// each `checkpoints` entry.
pub fn run_seed(
    analysis: &Analysis,
    sampler: &TrajectorySampler,
    schedule: &LrSchedule,
    checkpoints: &[u64],
    seed: u64,
) -> Result<SeedTrace> {
    let x = &analysis.features;
    let j = analysis.chain.avg_reward;
    let (mut d2s, mut j2s, mut combined) = (Vec::new(), Vec::new(), Vec::new());
    let observe = |st: &LearnerState| -> Result<()> {
        let d2 = analysis.distance_sq(&st.w);
        d2s.push(d2);
        if let Some(c) = analysis.combined_distance_sq(st.j_hat, &st.w) {
            let j2 = (st.j_hat - j).powi(2);
            let split = j2 + d2;
            if (split - c).abs() > COMBINED_IDENTITY_TOL * c.max(1.0) {
                return Err(Error::LemmaViolation {
                    lemma: "combined distance identity",
                    detail: format!("seed {seed}, t = {}: {split:e} vs {c:e}", st.t),
                });
            }
            j2s.push(j2);
            combined.push(c);
        }
        Ok(())
    };
    let final_state = match analysis.setting {
        Setting::Discounted { gamma } => {
            let td = DiscountedTd::new(x, gamma, analysis.lambda, *schedule)?;
            simulate(sampler, checkpoints, seed, x.dim(), |st, tr| td.step(st, tr), observe)?
        }
        Setting::AverageReward => {
            let td = AverageRewardTd::new(x, analysis.lambda, *schedule)?;
            simulate(sampler, checkpoints, seed, x.dim(), |st, tr| td.step(st, tr), observe)?
        }
    };
    Ok(SeedTrace {
        seed,
        d2: d2s,
        j2: j2s,
        combined,
        final_state,
    })
}

fn mean_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean and standard error across seeds at each checkpoint.
pub fn aggregate(checkpoints: &[u64], traces: &[SeedTrace], average: bool) -> RunRecord {
    let k = checkpoints.len();
    let col = |f: fn(&SeedTrace) -> &Vec<f64>, i: usize| traces.iter().map(move |tr| f(tr)[i]);
    let (mean_d2, stderr_d2) = (0..k).map(|i| mean_stderr(col(|t| &t.d2, i))).unzip();
    let average = average.then(|| {
        let (mean_j2, stderr_j2) = (0..k).map(|i| mean_stderr(col(|t| &t.j2, i))).unzip();
        let mean_combined = (0..k).map(|i| mean_stderr(col(|t| &t.combined, i)).0).collect();
        AverageRewardSeries {
            mean_j2,
            stderr_j2,
            mean_combined,
        }
    });
    RunRecord {
        t: checkpoints.to_vec(),
        mean_d2,
        stderr_d2,
        average,
        meta: None,
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(cfg).expect("config serializes"));
    hex::encode(h.finalize())
}

/// Runs every seed of `cfg` in parallel and aggregates the results. The oracle
/// is solved first, so an inconsistent system fails before any simulation.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let inst = cfg.instance()?;
    run_experiment_on(cfg, &inst)
}

/// [`run_experiment`] for an already resolved instance.
pub fn run_experiment_on(cfg: &ExperimentConfig, inst: &Instance) -> Result<RunRecord> {
    let schedule = cfg.lr_schedule()?;
    let analysis = Analysis::new(inst, cfg.setting, cfg.lambda, schedule.c_beta, cfg.cutoff())?;
    let oracle = OracleReport::new(&analysis, &cfg.verify.c_beta_grid)?;
    let sampler = match &cfg.initial_dist {
        Some(p0) => TrajectorySampler::with_initial(&inst.mdp, &inst.policy, p0)?,
        None => TrajectorySampler::new(&inst.mdp, &inst.policy)?,
    };
    let checkpoints = checkpoint_grid(cfg.horizon, cfg.checkpoints);
    let seeds = cfg.seeds();
    let results = par_map_seeds(&seeds, |seed| run_seed(&analysis, &sampler, &schedule, &checkpoints, seed));

    let mut traces = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(tr) => traces.push(tr),
            Err(Error::NonFiniteUpdate { t, detail }) => failures.push((t, detail)),
            Err(e) => return Err(e),
        }
    }
    if let Some(&(t, _)) = failures.first() {
        let detail = failures.iter().map(|(_, d)| d.as_str()).collect::<Vec<_>>().join("; ");
        return Err(Error::NonFiniteUpdate { t, detail });
    }

    let mut record = aggregate(&checkpoints, &traces, cfg.setting.is_average_reward());
    record.meta = Some(RunMeta {
        config: cfg.clone(),
        oracle,
        seeds,
        config_hash: config_hash(cfg),
        final_w: traces.iter().map(|t| t.final_state.w.iter().copied().collect()).collect(),
        final_j_hat: traces.iter().map(|t| t.final_state.j_hat).collect(),
    });
    Ok(record)
}

/// Final weights of a run as vectors.
pub fn final_weights(record: &RunRecord) -> Vec<DVector<f64>> {
    record
        .meta
        .as_ref()
        .map(|m| m.final_w.iter().map(|w| DVector::from_column_slice(w)).collect())
        .unwrap_or_default()
}
