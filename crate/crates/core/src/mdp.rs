//! Finite MDPs, evaluation policies and the exact quantities of the chain a
//! policy induces: `P_pi`, `r_pi`, `d_pi`, `J_pi` and the two value functions.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use std::collections::VecDeque;

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;
const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 1_000_000;
const POWER_TOL: f64 = 1e-13;

/// Finite MDP `(S, A, p, r, p0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    /// `p[s][a][s']`, flattened row-major.
    transition: Vec<f64>,
    /// `|S| x |A|`.
    reward: DMatrix<f64>,
    initial_dist: DVector<f64>,
}

fn check_distribution(row: &[f64], what: &str) -> Result<()> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidModel(format!("{what} has a negative or non-finite entry")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidModel(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

impl TabularMdp {
    /// `transition[s][a]` is the next-state distribution for `(s, a)`.
    pub fn new(
        transition: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<f64>>,
        initial_dist: Vec<f64>,
    ) -> Result<Self> {
        let num_states = transition.len();
        if num_states == 0 {
            return Err(Error::InvalidModel("no states".into()));
        }
        let num_actions = transition[0].len();
        if num_actions == 0 {
            return Err(Error::InvalidModel("no actions".into()));
        }
        let mut flat = Vec::with_capacity(num_states * num_actions * num_states);
        for (s, per_action) in transition.iter().enumerate() {
            if per_action.len() != num_actions {
                return Err(Error::DimensionMismatch(format!(
                    "state {s} has {} actions, expected {num_actions}",
                    per_action.len()
                )));
            }
            for (a, row) in per_action.iter().enumerate() {
                if row.len() != num_states {
                    return Err(Error::DimensionMismatch(format!(
                        "p[{s}][{a}] has length {}, expected {num_states}",
                        row.len()
                    )));
                }
                check_distribution(row, &format!("p[{s}][{a}]"))?;
                flat.extend_from_slice(row);
            }
        }
        if reward.len() != num_states || reward.iter().any(|r| r.len() != num_actions) {
            return Err(Error::DimensionMismatch(format!(
                "reward table must be {num_states}x{num_actions}"
            )));
        }
        if reward.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::InvalidModel("reward has a non-finite entry".into()));
        }
        if initial_dist.len() != num_states {
            return Err(Error::DimensionMismatch(format!(
                "initial distribution has length {}, expected {num_states}",
                initial_dist.len()
            )));
        }
        check_distribution(&initial_dist, "initial distribution")?;
        Ok(Self {
            num_states,
            num_actions,
            transition: flat,
            reward: DMatrix::from_fn(num_states, num_actions, |s, a| reward[s][a]),
            initial_dist: DVector::from_vec(initial_dist),
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Next-state distribution of `(s, a)`.
    pub fn next_state_probs(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.transition[start..start + self.num_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[(s, a)]
    }

    pub fn reward_table(&self) -> &DMatrix<f64> {
        &self.reward
    }

    pub fn initial_dist(&self) -> &DVector<f64> {
        &self.initial_dist
    }

    /// Nested `p[s][a][s']` representation.
    pub fn transition_tensor(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.num_states)
            .map(|s| {
                (0..self.num_actions)
                    .map(|a| self.next_state_probs(s, a).to_vec())
                    .collect()
            })
            .collect()
    }
}

/// Row-stochastic `pi(a|s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    probs: DMatrix<f64>,
}

impl Policy {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        let rows = probs.len();
        let cols = probs.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || probs.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("policy must be a non-empty rectangular matrix".into()));
        }
        for (s, row) in probs.iter().enumerate() {
            check_distribution(row, &format!("pi(.|{s})"))?;
        }
        Ok(Self {
            probs: DMatrix::from_fn(rows, cols, |s, a| probs[s][a]),
        })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self {
            probs: DMatrix::from_element(num_states, num_actions, 1.0 / num_actions as f64),
        }
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[(s, a)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.probs.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// Exact quantities of the Markov chain induced by a policy.
#[derive(Clone, Debug)]
pub struct PolicyChain {
    pub p: DMatrix<f64>,
    pub r: DVector<f64>,
    pub d: DVector<f64>,
    pub avg_reward: f64,
}

impl PolicyChain {
    pub fn num_states(&self) -> usize {
        self.p.nrows()
    }

    /// `D_pi`.
    pub fn d_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.d)
    }

    /// Build a chain directly from a transition matrix and reward vector.
    /// Runs the same irreducibility/aperiodicity checks as [`induce_chain`].
    pub fn from_matrix(p: DMatrix<f64>, r: DVector<f64>) -> Result<Self> {
        let n = p.nrows();
        if p.ncols() != n || r.len() != n || n == 0 {
            return Err(Error::DimensionMismatch("P must be square and match r".into()));
        }
        for s in 0..n {
            let row: Vec<f64> = p.row(s).iter().copied().collect();
            check_distribution(&row, &format!("P[{s}]"))?;
        }
        check_irreducible(&p)?;
        let period = chain_period(&p);
        if period != 1 {
            return Err(Error::NotAperiodic { period });
        }
        let d = stationary_distribution(&p)?;
        let avg_reward = d.dot(&r);
        Ok(Self { p, r, d, avg_reward })
    }
}

/// `P_pi`, `r_pi`, `d_pi` and `J_pi` for `policy` on `mdp`.
pub fn induce_chain(mdp: &TabularMdp, policy: &Policy) -> Result<PolicyChain> {
    let n = mdp.num_states();
    let m = mdp.num_actions();
    if policy.matrix().shape() != (n, m) {
        return Err(Error::DimensionMismatch(format!(
            "policy is {:?}, MDP needs {n}x{m}",
            policy.matrix().shape()
        )));
    }
    let mut p = DMatrix::zeros(n, n);
    let mut r = DVector::zeros(n);
    for s in 0..n {
        for a in 0..m {
            let pa = policy.prob(s, a);
            if pa == 0.0 {
                continue;
            }
            r[s] += pa * mdp.reward(s, a);
            for (s2, &q) in mdp.next_state_probs(s, a).iter().enumerate() {
                p[(s, s2)] += pa * q;
            }
        }
    }
    PolicyChain::from_matrix(p, r)
}

fn successors(p: &DMatrix<f64>, s: usize) -> impl Iterator<Item = usize> + '_ {
    (0..p.ncols()).filter(move |&t| p[(s, t)] > 0.0)
}

fn bfs_levels(p: &DMatrix<f64>, reverse: bool) -> Vec<Option<usize>> {
    let n = p.nrows();
    let mut level = vec![None; n];
    level[0] = Some(0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let lu = level[u].unwrap();
        for v in 0..n {
            let edge = if reverse { p[(v, u)] > 0.0 } else { p[(u, v)] > 0.0 };
            if edge && level[v].is_none() {
                level[v] = Some(lu + 1);
                queue.push_back(v);
            }
        }
    }
    level
}

/// Strong connectivity of the transition graph (edges where `P > 0`).
pub fn check_irreducible(p: &DMatrix<f64>) -> Result<()> {
    let fwd = bfs_levels(p, false);
    let bwd = bfs_levels(p, true);
    match (0..p.nrows()).find(|&s| fwd[s].is_none() || bwd[s].is_none()) {
        Some(unreachable) => Err(Error::NotIrreducible { unreachable }),
        None => Ok(()),
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period of an irreducible chain: gcd over edges `u -> v` of
/// `level(u) + 1 - level(v)` for BFS levels from state 0.
pub fn chain_period(p: &DMatrix<f64>) -> usize {
    let level = bfs_levels(p, false);
    let mut g = 0;
    for u in 0..p.nrows() {
        let Some(lu) = level[u] else { continue };
        for v in successors(p, u) {
            if let Some(lv) = level[v] {
                g = gcd(g, (lu + 1).abs_diff(lv));
            }
        }
    }
    g
}

/// Left eigenvector of `P` for eigenvalue 1, normalised to sum 1.
///
/// Solved directly as `(P^T - I) d = 0` with the last equation replaced by
/// `1^T d = 1`; power iteration is the fallback if that system is singular.
pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p.nrows();
    let mut m = p.transpose() - DMatrix::identity(n, n);
    m.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let d = match m.lu().solve(&rhs) {
        Some(d) if d.iter().all(|x| x.is_finite()) => d,
        _ => power_iteration_stationary(p)?,
    };
    let residual = (p.transpose() * &d - &d).amax();
    if residual > STATIONARY_RESIDUAL_TOL || d.iter().any(|&x| x <= 0.0) {
        let d = power_iteration_stationary(p)?;
        if d.iter().any(|&x| x <= 0.0) {
            return Err(Error::InvalidModel("stationary distribution has a zero entry".into()));
        }
        return Ok(d);
    }
    Ok(d)
}

fn power_iteration_stationary(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p.nrows();
    let pt = p.transpose();
    let mut d = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..POWER_MAX_ITERS {
        let mut next = &pt * &d;
        next /= next.sum();
        let delta = (&next - &d).lp_norm(1);
        d = next;
        if delta < POWER_TOL {
            return Ok(d);
        }
    }
    Err(Error::SingularSystem("power iteration for d_pi did not converge".into()))
}

/// `v_pi = (I - gamma P_pi)^{-1} r_pi`.
pub fn discounted_value(chain: &PolicyChain, gamma: f64) -> Result<DVector<f64>> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidLambda { gamma, lambda: 0.0 });
    }
    let n = chain.num_states();
    let m = DMatrix::identity(n, n) - &chain.p * gamma;
    m.lu()
        .solve(&chain.r)
        .ok_or_else(|| Error::SingularSystem("I - gamma P_pi".into()))
}

/// Differential value `v̄_pi`: solves `(I - P) v = r - J 1` with `d^T v = 0`.
///
/// Uses the fundamental matrix `I - P + 1 d^T`, which is invertible for an
/// irreducible chain; its solution automatically satisfies `d^T v = 0`.
pub fn differential_value(chain: &PolicyChain) -> Result<DVector<f64>> {
    let n = chain.num_states();
    let ones = DVector::from_element(n, 1.0);
    let m = DMatrix::identity(n, n) - &chain.p + &ones * chain.d.transpose();
    let rhs = &chain.r - &ones * chain.avg_reward;
    m.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("fundamental matrix".into()))
}

/// One observed transition `(S_t, A_t, R_{t+1}, S_{t+1})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

/// Samples trajectories of an MDP under a fixed policy.
#[derive(Clone, Debug)]
pub struct TrajectorySampler {
    actions: Vec<WeightedIndex<f64>>,
    next: Vec<WeightedIndex<f64>>,
    rewards: DMatrix<f64>,
    initial: WeightedIndex<f64>,
    num_actions: usize,
}

impl TrajectorySampler {
    pub fn new(mdp: &TabularMdp, policy: &Policy) -> Result<Self> {
        Self::with_initial(mdp, policy, mdp.initial_dist().as_slice())
    }

    /// Same sampler, but `S_0` drawn from `initial` instead of `p0`.
    pub fn with_initial(mdp: &TabularMdp, policy: &Policy, initial: &[f64]) -> Result<Self> {
        let n = mdp.num_states();
        let m = mdp.num_actions();
        if policy.matrix().shape() != (n, m) || initial.len() != n {
            return Err(Error::DimensionMismatch("sampler inputs".into()));
        }
        let bad = |e| Error::InvalidModel(format!("cannot sample: {e}"));
        let actions = (0..n)
            .map(|s| WeightedIndex::new(policy.matrix().row(s).iter().copied()).map_err(bad))
            .collect::<Result<_>>()?;
        let next = (0..n * m)
            .map(|k| WeightedIndex::new(mdp.next_state_probs(k / m, k % m).iter().copied()).map_err(bad))
            .collect::<Result<_>>()?;
        Ok(Self {
            actions,
            next,
            rewards: mdp.reward_table().clone(),
            initial: WeightedIndex::new(initial.iter().copied()).map_err(bad)?,
            num_actions: m,
        })
    }

    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.initial.sample(rng)
    }

    /// Draw `A ~ pi(.|s)`, then `S' ~ p(.|s, A)`.
    pub fn step<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> Transition {
        let action = self.actions[state].sample(rng);
        let next_state = self.next[state * self.num_actions + action].sample(rng);
        Transition {
            state,
            action,
            reward: self.rewards[(state, action)],
            next_state,
        }
    }
}
