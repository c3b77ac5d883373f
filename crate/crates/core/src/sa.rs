//! Generic Markovian stochastic approximation `w_{t+1} = w_t + α_t H(w_t, Y_{t+1})`
//! with a Lyapunov trace `L(w) = ½ d(w, W*)²` and probes for the standing
//! assumptions: Lipschitz continuity of `H`, negative drift of the mean field
//! and a mixing-time surrogate.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::learners::LrSchedule;
use crate::linalg::dot;
use crate::mdp::{check_irreducible, chain_period, stationary_distribution, Transition, TrajectorySampler};
use crate::oracle::AffineSet;

pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Source of the Markov noise `Y_t`.
pub trait MarkovDriver {
    type Sample;
    /// Draws the initial internal state.
    fn reset(&mut self, rng: &mut SimRng);
    /// Moves one step and returns `Y_{t+1}`.
    fn advance(&mut self, rng: &mut SimRng) -> &Self::Sample;
}

/// `H(w, y)`, written into `out`.
pub trait UpdateMap<Y> {
    fn apply(&self, w: &DVector<f64>, y: &Y, out: &mut DVector<f64>);
}

impl<Y, F> UpdateMap<Y> for F
where
    F: Fn(&DVector<f64>, &Y, &mut DVector<f64>),
{
    fn apply(&self, w: &DVector<f64>, y: &Y, out: &mut DVector<f64>) {
        self(w, y, out)
    }
}

/// `h(w) = M w + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineMap {
    pub fn new(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != offset.len() {
            return Err(Error::DimensionMismatch("affine map must be square with matching offset".into()));
        }
        Ok(Self { matrix, offset })
    }

    pub fn apply(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.matrix * w + &self.offset
    }
}

pub struct SaProblem<D, H> {
    pub update_map: H,
    pub driver: D,
    pub target_set: AffineSet,
    pub mean_field: Option<AffineMap>,
    pub initial: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaTrajectory {
    /// `(t, L(w_t))`, strictly increasing in `t`.
    pub points: Vec<(u64, f64)>,
    pub final_w: DVector<f64>,
    pub seed: u64,
    pub config_hash: String,
}

fn config_hash(schedule: &LrSchedule, initial: &DVector<f64>, horizon: u64, seed: u64, thinning: u64) -> String {
    let mut h = Sha256::new();
    h.update(format!("{schedule:?}|{:?}|{horizon}|{seed}|{thinning}", initial.as_slice()));
    hex::encode(h.finalize())
}

/// Iterates the recursion for `horizon` steps, recording `L(w_t)` at `t = 0`,
/// every `thinning` steps and at `t = horizon`.
pub fn run_sa<D, H>(
    problem: &mut SaProblem<D, H>,
    schedule: &LrSchedule,
    horizon: u64,
    seed: u64,
    thinning: u64,
) -> Result<SaTrajectory>
where
    D: MarkovDriver,
    H: UpdateMap<D::Sample>,
{
    if horizon == 0 || thinning == 0 {
        return Err(Error::Config("run_sa needs horizon >= 1 and thinning >= 1".into()));
    }
    schedule.validate()?;
    let dim = problem.initial.len();
    if problem.target_set.ambient_dim() != dim {
        return Err(Error::DimensionMismatch("initial point and target set".into()));
    }
    let mut rng = seeded_rng(seed);
    problem.driver.reset(&mut rng);
    let mut w = problem.initial.clone();
    let mut inc = DVector::zeros(dim);
    let mut points = vec![(0, problem.target_set.lyapunov(&w))];
    for t in 0..horizon {
        let alpha = schedule.alpha_at(t);
        let y = problem.driver.advance(&mut rng);
        problem.update_map.apply(&w, y, &mut inc);
        if w.iter().zip(inc.iter()).any(|(wi, hi)| !(wi + alpha * hi).is_finite()) {
            return Err(Error::NonFiniteUpdate {
                t,
                detail: format!("last finite w = {:?}", w.as_slice()),
            });
        }
        for (wi, hi) in w.iter_mut().zip(inc.iter()) {
            *wi += alpha * hi;
        }
        let next = t + 1;
        if next % thinning == 0 || next == horizon {
            points.push((next, problem.target_set.lyapunov(&w)));
        }
    }
    Ok(SaTrajectory {
        points,
        final_w: w,
        seed,
        config_hash: config_hash(schedule, &problem.initial, horizon, seed, thinning),
    })
}

/// Noise-free iteration `w ← w + α_t h(w)`, returning `(t, L(w_t))` every
/// `thinning` steps plus the endpoints.
pub fn run_mean_field(
    map: &AffineMap,
    target: &AffineSet,
    schedule: &LrSchedule,
    w0: &DVector<f64>,
    horizon: u64,
    thinning: u64,
) -> Vec<(u64, f64)> {
    let mut w = w0.clone();
    let mut out = vec![(0, target.lyapunov(&w))];
    for t in 0..horizon {
        w += schedule.alpha_at(t) * map.apply(&w);
        let next = t + 1;
        if next % thinning.max(1) == 0 || next == horizon {
            out.push((next, target.lyapunov(&w)));
        }
    }
    out
}

impl<D, H> SaProblem<D, H> {
    /// [`drift_probe`] against the problem's own mean field.
    pub fn drift_probe(&self, num_points: usize, seed: u64) -> Result<(f64, DVector<f64>)> {
        let h = self
            .mean_field
            .as_ref()
            .ok_or_else(|| Error::Config("drift probe needs a mean field".into()))?;
        Ok(drift_probe(&self.target_set, |w| h.apply(w), num_points, seed))
    }
}

fn normal_vector(dim: usize, scale: f64, rng: &mut SimRng) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

/// Largest `|H(w₁,y) - H(w₂,y)| / |w₁ - w₂|` over `num_pairs` Gaussian pairs
/// per sample.
pub fn lipschitz_probe<Y, H: UpdateMap<Y>>(h: &H, dim: usize, samples: &[Y], num_pairs: usize, seed: u64) -> f64 {
    let mut rng = seeded_rng(seed);
    let mut h1 = DVector::zeros(dim);
    let mut h2 = DVector::zeros(dim);
    let mut best: f64 = 0.0;
    for _ in 0..num_pairs {
        let w1 = normal_vector(dim, 10.0, &mut rng);
        let w2 = normal_vector(dim, 10.0, &mut rng);
        let gap = (&w1 - &w2).norm();
        if gap == 0.0 {
            continue;
        }
        for y in samples {
            h.apply(&w1, y, &mut h1);
            h.apply(&w2, y, &mut h2);
            best = best.max((&h1 - &h2).norm() / gap);
        }
    }
    best
}

/// Smallest `-⟨w - Γ(w), h(w)⟩ / L(w)` over random points around the target
/// set, with the point attaining it. Positive values certify negative drift on
/// the sample.
pub fn drift_probe(
    target: &AffineSet,
    h: impl Fn(&DVector<f64>) -> DVector<f64>,
    num_points: usize,
    seed: u64,
) -> (f64, DVector<f64>) {
    let mut rng = seeded_rng(seed);
    let scale = target.particular().norm().max(1.0);
    let mut worst = (f64::INFINITY, target.particular().clone());
    for _ in 0..num_points {
        let w = target.particular() + normal_vector(target.ambient_dim(), scale, &mut rng);
        let l = target.lyapunov(&w);
        if l <= 1e-12 {
            continue;
        }
        let ratio = -target.lyapunov_gradient(&w).dot(&h(&w)) / l;
        if ratio < worst.0 {
            worst = (ratio, w);
        }
    }
    worst
}

const MIXING_MAX_STEPS: usize = 1_000_000;

/// Smallest `n >= 1` with `max_s TV(Pⁿ(s,·), d) <= accuracy`.
///
/// This total-variation criterion stands in for the geometric mixing bound,
/// whose constants are never given numerically.
pub fn mixing_time(p: &DMatrix<f64>, accuracy: f64) -> Result<usize> {
    if !(accuracy > 0.0 && accuracy < 1.0) {
        return Err(Error::Config(format!("mixing accuracy must lie in (0, 1), got {accuracy}")));
    }
    check_irreducible(p)?;
    let period = chain_period(p);
    if period != 1 {
        return Err(Error::NotAperiodic { period });
    }
    let d = stationary_distribution(p)?;
    let tv = |m: &DMatrix<f64>| {
        m.row_iter()
            .map(|row| 0.5 * row.iter().zip(d.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let mut pn = p.clone();
    for n in 1..=MIXING_MAX_STEPS {
        if tv(&pn) <= accuracy {
            return Ok(n);
        }
        pn = &pn * p;
    }
    Err(Error::NoMixing {
        accuracy,
        max_steps: MIXING_MAX_STEPS,
    })
}

/// Runs `f` for each seed in parallel; results come back in seed order.
pub fn par_map_seeds<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    seeds.par_iter().map(|&s| f(s)).collect()
}

/// Monte Carlo estimate of `E[H(w, Y)]` with a batch-means standard error.
#[derive(Clone, Debug)]
pub struct MeanEstimate {
    pub mean: DVector<f64>,
    pub stderr: DVector<f64>,
}

impl MeanEstimate {
    /// Largest `|mean - target| / stderr` over coordinates. Coordinates with a
    /// zero standard error count only if they miss the target.
    pub fn max_z(&self, target: &DVector<f64>) -> f64 {
        self.mean
            .iter()
            .zip(self.stderr.iter())
            .zip(target.iter())
            .map(|((m, s), t)| {
                let gap = (m - t).abs();
                if *s > 0.0 {
                    gap / s
                } else if gap <= 1e-12 * t.abs().max(1.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Averages `H(w, Y_t)` for every `w` in `points` along one trajectory of
/// `steps` samples after `burn_in` discarded ones. Standard errors come from
/// `batches` equal batch means, which absorbs the serial correlation of `Y`.
pub fn mean_update_estimate<D, H>(
    driver: &mut D,
    h: &H,
    points: &[DVector<f64>],
    steps: usize,
    burn_in: usize,
    batches: usize,
    seed: u64,
) -> Vec<MeanEstimate>
where
    D: MarkovDriver,
    H: UpdateMap<D::Sample>,
{
    let batches = batches.max(2);
    let per_batch = (steps / batches).max(1);
    let mut rng = seeded_rng(seed);
    driver.reset(&mut rng);
    for _ in 0..burn_in {
        driver.advance(&mut rng);
    }
    let dims: Vec<usize> = points.iter().map(|w| w.len()).collect();
    let mut batch_means: Vec<Vec<DVector<f64>>> = dims.iter().map(|_| Vec::with_capacity(batches)).collect();
    let mut acc: Vec<DVector<f64>> = dims.iter().map(|&d| DVector::zeros(d)).collect();
    let mut inc: Vec<DVector<f64>> = dims.iter().map(|&d| DVector::zeros(d)).collect();
    for _ in 0..batches {
        acc.iter_mut().for_each(|a| a.fill(0.0));
        for _ in 0..per_batch {
            let y = driver.advance(&mut rng);
            for ((w, a), buf) in points.iter().zip(acc.iter_mut()).zip(inc.iter_mut()) {
                h.apply(w, y, buf);
                *a += &*buf;
            }
        }
        for (a, bm) in acc.iter().zip(batch_means.iter_mut()) {
            bm.push(a / per_batch as f64);
        }
    }
    batch_means
        .into_iter()
        .zip(dims)
        .map(|(bm, d)| {
            let k = bm.len() as f64;
            let mean = bm.iter().fold(DVector::zeros(d), |s, b| s + b) / k;
            let var = bm.iter().fold(DVector::zeros(d), |s, b| {
                let diff = b - &mean;
                s + diff.component_mul(&diff)
            }) / (k - 1.0);
            let stderr = var.map(|v| (v / k).sqrt());
            MeanEstimate { mean, stderr }
        })
        .collect()
}

/// `Y_{t+1} = (S_t, A_t, R_{t+1}, S_{t+1}, e_t)` for a TD learner.
#[derive(Clone, Debug)]
pub struct TdSample {
    pub transition: Transition,
    pub trace: DVector<f64>,
}

/// Markov driver for TD(λ): the state of the chain plus the eligibility trace
/// `e_t = decay e_{t-1} + x(S_t)`.
#[derive(Clone, Debug)]
pub struct TdDriver {
    sampler: TrajectorySampler,
    features: FeatureMatrix,
    decay: f64,
    state: usize,
    sample: TdSample,
}

impl TdDriver {
    /// `decay` is `γλ` for discounted TD and `λ` for average-reward TD.
    pub fn new(sampler: TrajectorySampler, features: FeatureMatrix, decay: f64) -> Self {
        let d = features.dim();
        Self {
            sampler,
            features,
            decay,
            state: 0,
            sample: TdSample {
                transition: Transition {
                    state: 0,
                    action: 0,
                    reward: 0.0,
                    next_state: 0,
                },
                trace: DVector::zeros(d),
            },
        }
    }
}

impl MarkovDriver for TdDriver {
    type Sample = TdSample;

    fn reset(&mut self, rng: &mut SimRng) {
        self.state = self.sampler.initial_state(rng);
        self.sample.trace.fill(0.0);
    }

    fn advance(&mut self, rng: &mut SimRng) -> &TdSample {
        let tr = self.sampler.step(self.state, rng);
        let x = self.features.row(tr.state);
        for (ei, xi) in self.sample.trace.iter_mut().zip(x) {
            *ei = self.decay * *ei + xi;
        }
        self.state = tr.next_state;
        self.sample.transition = tr;
        &self.sample
    }
}

/// `H(w, y) = (R + γ x(S')ᵀw - x(S)ᵀw) e`.
pub fn discounted_update_map(features: FeatureMatrix, gamma: f64) -> impl Fn(&DVector<f64>, &TdSample, &mut DVector<f64>) {
    move |w, y, out| {
        let tr = &y.transition;
        let ws = w.as_slice();
        let delta = tr.reward + gamma * dot(features.row(tr.next_state), ws) - dot(features.row(tr.state), ws);
        for (o, e) in out.iter_mut().zip(y.trace.iter()) {
            *o = delta * e;
        }
    }
}

/// Average-reward TD on the stacked iterate `[Ĵ; w]`:
/// `H = [c_β (R - Ĵ); (R - Ĵ + x(S')ᵀw - x(S)ᵀw) e]`.
pub fn average_reward_update_map(
    features: FeatureMatrix,
    c_beta: f64,
) -> impl Fn(&DVector<f64>, &TdSample, &mut DVector<f64>) {
    move |v, y, out| {
        let tr = &y.transition;
        let j = v[0];
        let w = &v.as_slice()[1..];
        let delta = tr.reward - j + dot(features.row(tr.next_state), w) - dot(features.row(tr.state), w);
        out[0] = c_beta * (tr.reward - j);
        for (o, e) in out.iter_mut().skip(1).zip(y.trace.iter()) {
            *o = delta * e;
        }
    }
}

/// `{J} × W̄*` inside `R^{1+d}`, the target of the stacked average-reward
/// iterate. Its squared distance is `(Ĵ - J)² + d(w, W̄*)²`.
pub fn stacked_target(avg_reward: f64, ar_set: &AffineSet) -> Result<AffineSet> {
    let d = ar_set.ambient_dim();
    let mut p = DVector::zeros(d + 1);
    p[0] = avg_reward;
    p.rows_mut(1, d).copy_from(ar_set.particular());
    let k = ar_set.dim();
    let mut basis = DMatrix::zeros(d + 1, k);
    basis.view_mut((1, 0), (d, k)).copy_from(ar_set.basis());
    AffineSet::new(p, basis)
}
