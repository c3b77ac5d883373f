use crate::features::FeatureMatrix;
use crate::mdp::{Policy, TabularMdp};
use crate::oracle::Instance;

pub const NUM_STATES: usize = 15;
pub const NUM_ACTIONS: usize = 5;

/// Rank-3 feature matrix, one row per state.
pub const FEATURES: [[f64; 5]; NUM_STATES] = [
    [0.07, 0.11, 0.18, 0.14, 0.61],
    [0.13, 0.19, 0.32, 0.26, 0.45],
    [0.11, 0.17, 0.28, 0.22, 0.39],
    [0.24, 0.36, 0.60, 0.48, 0.84],
    [0.18, 0.28, 0.46, 0.36, 1.00],
    [0.20, 0.30, 0.50, 0.40, 1.06],
    [0.31, 0.47, 0.78, 0.62, 1.45],
    [0.29, 0.45, 0.74, 0.58, 1.39],
    [0.42, 0.64, 1.06, 0.84, 1.84],
    [0.40, 0.62, 1.02, 0.80, 1.78],
    [0.47, 0.73, 1.20, 0.94, 2.39],
    [0.53, 0.81, 1.34, 1.06, 2.23],
    [0.58, 0.90, 1.48, 1.16, 2.78],
    [0.60, 0.92, 1.52, 1.20, 2.84],
    [0.67, 1.03, 1.70, 1.34, 3.45],
];

/// The 15-state Boyan-chain variant.
///
/// From `s_i`, `i >= 2`, action `a_0` moves to `s_{i-1}` and the other four
/// actions to `s_{i-2}`. `s_1` always moves to `s_0`, and `s_0` jumps to a
/// uniformly random state, itself included. The reward is 1 in `s_0` and 0
/// elsewhere. The policy is uniform over actions and `S_0` is uniform.
pub fn boyan_chain() -> (TabularMdp, Policy, FeatureMatrix) {
    let uniform = vec![1.0 / NUM_STATES as f64; NUM_STATES];
    let transition = (0..NUM_STATES)
        .map(|s| {
            (0..NUM_ACTIONS)
                .map(|a| match s {
                    0 => uniform.clone(),
                    1 => one_hot(0),
                    _ if a == 0 => one_hot(s - 1),
                    _ => one_hot(s - 2),
                })
                .collect()
        })
        .collect();
    let reward = (0..NUM_STATES)
        .map(|s| vec![if s == 0 { 1.0 } else { 0.0 }; NUM_ACTIONS])
        .collect();
    let mdp = TabularMdp::new(transition, reward, uniform).expect("boyan chain is a valid MDP");
    let policy = Policy::uniform(NUM_STATES, NUM_ACTIONS);
    let rows: Vec<Vec<f64>> = FEATURES.iter().map(|r| r.to_vec()).collect();
    let features = FeatureMatrix::from_rows(&rows).expect("boyan features are finite");
    (mdp, policy, features)
}

pub fn boyan_instance() -> Instance {
    let (mdp, policy, features) = boyan_chain();
    Instance { mdp, policy, features }
}

fn one_hot(s: usize) -> Vec<f64> {
    let mut v = vec![0.0; NUM_STATES];
    v[s] = 1.0;
    v
}
