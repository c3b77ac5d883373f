#![allow(dead_code)]

use linear_td::mdp::{Policy, PolicyChain, TabularMdp};
use linear_td::oracle::Instance;
use linear_td::FeatureMatrix;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_vec(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| normal(rng))
}

pub fn normal_mat(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| normal(rng))
}

/// Irreducible, aperiodic transition matrix: dense, or a ring with a
/// self-loop plus random shortcuts.
pub fn random_transition(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let dense = rng.random_bool(0.5);
    let mut p = DMatrix::from_fn(n, n, |i, j| {
        if dense {
            rng.random_range(0.05..1.0)
        } else if j == (i + 1) % n || (i == 0 && j == 0) {
            rng.random_range(0.2..1.0)
        } else if rng.random_bool(0.3) {
            rng.random_range(0.0..1.0)
        } else {
            0.0
        }
    });
    for mut row in p.row_iter_mut() {
        let s: f64 = row.sum();
        row /= s;
    }
    p
}

pub fn random_chain(n: usize, rng: &mut ChaCha8Rng) -> PolicyChain {
    let p = random_transition(n, rng);
    let r = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    PolicyChain::from_matrix(p, r).expect("random chain is ergodic")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    /// Gaussian entries.
    General,
    /// Product of thin Gaussian factors.
    RankDeficient,
    /// A column replaced by a multiple of the all-ones vector.
    OnesColumn,
    /// Two columns summing to a constant, plus a duplicated column.
    HiddenOnes,
}

pub const KINDS: [FeatureKind; 4] = [
    FeatureKind::General,
    FeatureKind::RankDeficient,
    FeatureKind::OnesColumn,
    FeatureKind::HiddenOnes,
];

pub fn random_features(n: usize, d: usize, kind: FeatureKind, rng: &mut ChaCha8Rng) -> FeatureMatrix {
    let mut x = normal_mat(n, d, rng);
    match kind {
        FeatureKind::General => {}
        FeatureKind::RankDeficient => {
            let k = rng.random_range(1..=n.min(d));
            let k = if k == n.min(d) && k > 1 { k - 1 } else { k };
            x = normal_mat(n, k, rng) * normal_mat(k, d, rng);
        }
        FeatureKind::OnesColumn => {
            let j = rng.random_range(0..d);
            let c = rng.random_range(0.5..2.0);
            x.set_column(j, &DVector::from_element(n, c));
        }
        FeatureKind::HiddenOnes => {
            if d >= 2 {
                let c = rng.random_range(0.5..2.0);
                let col0 = x.column(0).into_owned();
                x.set_column(1, &(DVector::from_element(n, c) - col0));
            }
            if d >= 3 {
                let col1 = x.column(1).into_owned();
                x.set_column(d - 1, &(col1 * 2.0));
            }
        }
    }
    FeatureMatrix::new(x).expect("finite features")
}

/// Random `(chain, features)` with `|S| <= 8`, `d <= 6`.
pub fn random_instance(seed: u64) -> (PolicyChain, FeatureMatrix, FeatureKind) {
    let mut r = rng(seed);
    let n = r.random_range(2..=8);
    let d = r.random_range(1..=6);
    let kind = KINDS[(seed % 4) as usize];
    let chain = random_chain(n, &mut r);
    let x = random_features(n, d, kind, &mut r);
    (chain, x, kind)
}

/// Wraps a chain as a one-action MDP so it can be sampled.
pub fn chain_instance(chain: &PolicyChain, x: &FeatureMatrix) -> Instance {
    let n = chain.num_states();
    let transition = (0..n)
        .map(|s| vec![chain.p.row(s).iter().copied().collect::<Vec<f64>>()])
        .collect();
    let reward = (0..n).map(|s| vec![chain.r[s]]).collect();
    let mdp = TabularMdp::new(transition, reward, vec![1.0 / n as f64; n]).expect("valid mdp");
    Instance {
        mdp,
        policy: Policy::uniform(n, 1),
        features: x.clone(),
    }
}
