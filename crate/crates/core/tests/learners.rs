mod common;

use linear_td::learners::{AverageRewardTd, DiscountedTd, LearnerState, LrSchedule};
use linear_td::mdp::{Transition, TrajectorySampler};
use linear_td::FeatureMatrix;
use proptest::prelude::*;

fn features() -> FeatureMatrix {
    FeatureMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 2.0]]).unwrap()
}

fn path() -> [Transition; 3] {
    let tr = |state, reward, next_state| Transition {
        state,
        action: 0,
        reward,
        next_state,
    };
    [tr(0, 1.0, 1), tr(1, 0.0, 2), tr(2, -1.0, 0)]
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15)
}

// α_t = 1/(t+1): steps 1, 1/2, 1/3.
fn harmonic() -> LrSchedule {
    LrSchedule::new(1.0, 1.0, 1.0, 1.0).unwrap()
}

#[test]
fn discounted_three_steps_by_hand() {
    let x = features();
    let td = DiscountedTd::new(&x, 0.5, 0.5, harmonic()).unwrap();
    let mut s = LearnerState::zeros(2);
    let [t1, t2, t3] = path();

    td.step(&mut s, &t1).unwrap();
    assert!(close(s.e.as_slice(), &[1.0, 0.0]));
    assert!(close(s.w.as_slice(), &[1.0, 0.0]));

    // e = 0.25 [1, 0] + [0.5, 0.5], δ = 0 + 0.5*0 - 0.5.
    td.step(&mut s, &t2).unwrap();
    assert!(close(s.e.as_slice(), &[0.75, 0.5]));
    assert!(close(s.w.as_slice(), &[0.8125, -0.125]));

    // e = 0.25 [0.75, 0.5] + [0, 2], δ = -1 + 0.5*0.8125 + 0.25 = -0.34375.
    td.step(&mut s, &t3).unwrap();
    assert!(close(s.e.as_slice(), &[0.1875, 2.125]));
    assert!(close(s.w.as_slice(), &[0.8125 - 0.064_453_125 / 3.0, -0.125 - 0.730_468_75 / 3.0]));
    assert_eq!(s.t, 3);
    assert_eq!(s.j_hat, 0.0);
}

#[test]
fn average_reward_three_steps_by_hand() {
    let x = features();
    let td = AverageRewardTd::new(&x, 0.5, harmonic()).unwrap();
    let mut s = LearnerState::zeros(2);
    let [t1, t2, t3] = path();

    td.step(&mut s, &t1).unwrap();
    assert!(close(s.w.as_slice(), &[1.0, 0.0]));
    assert_eq!(s.j_hat, 1.0);

    // e = [1, 0.5], δ = 0 - 1 + 0 - 0.5; Ĵ = 1 + 0.5 (0 - 1).
    td.step(&mut s, &t2).unwrap();
    assert!(close(s.e.as_slice(), &[1.0, 0.5]));
    assert!(close(s.w.as_slice(), &[0.25, -0.375]));
    assert_eq!(s.j_hat, 0.5);

    // e = [0.5, 2.25], δ = -1 - 0.5 + 0.25 + 0.75 = -0.5; Ĵ = 0.5 + (-1.5)/3.
    td.step(&mut s, &t3).unwrap();
    assert!(close(s.e.as_slice(), &[0.5, 2.25]));
    assert!(close(s.w.as_slice(), &[0.25 - 0.25 / 3.0, -0.75]));
    assert!(s.j_hat.abs() < 1e-16);
}

#[test]
fn reward_ratio_scales_the_average_estimate() {
    let x = features();
    let sched = LrSchedule::new(0.2, 1.0, 1.0, 3.0).unwrap();
    let td = AverageRewardTd::new(&x, 0.0, sched).unwrap();
    let mut s = LearnerState::zeros(2);
    td.step(&mut s, &path()[0]).unwrap();
    assert!((s.j_hat - 0.6).abs() < 1e-15);
    assert!(close(s.w.as_slice(), &[0.2, 0.0]));
}

#[test]
fn learner_rejects_bad_parameters() {
    let x = features();
    assert!(DiscountedTd::new(&x, 1.0, 0.5, harmonic()).is_err());
    assert!(DiscountedTd::new(&x, 0.9, 1.5, harmonic()).is_err());
    assert!(AverageRewardTd::new(&x, 1.0, harmonic()).is_err());
    assert!(LrSchedule::new(1.0, 1.0, 0.5, 1.0).is_err());
    assert!(LrSchedule::new(1.0, 0.0, 1.0, 1.0).is_err());
}

fn simulate(seed: u64, steps: usize) -> LearnerState {
    let (mdp, policy, x) = linear_td::experiments::boyan_chain();
    let sampler = TrajectorySampler::new(&mdp, &policy).unwrap();
    let td = AverageRewardTd::new(&x, 0.4, LrSchedule::new(0.1, 10.0, 0.8, 2.0).unwrap()).unwrap();
    let mut rng = common::rng(seed);
    let mut state = LearnerState::zeros(x.dim());
    let mut s = sampler.initial_state(&mut rng);
    for _ in 0..steps {
        let tr = sampler.step(s, &mut rng);
        td.step(&mut state, &tr).unwrap();
        s = tr.next_state;
    }
    state
}

#[test]
fn same_seed_same_trajectory() {
    assert_eq!(simulate(5, 5000), simulate(5, 5000));
    assert_ne!(simulate(5, 5000).w, simulate(6, 5000).w);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn traces_stay_within_bound(seed in any::<u64>(), li in 0usize..3) {
        let (chain, x, _) = common::random_instance(seed);
        let inst = common::chain_instance(&chain, &x);
        let sampler = TrajectorySampler::new(&inst.mdp, &inst.policy).unwrap();
        let lambda = [0.0, 0.5, 0.9][li];
        let sched = LrSchedule::new(1e-3, 1.0, 1.0, 1.0).unwrap();
        let disc = DiscountedTd::new(&x, 0.95, lambda, sched).unwrap();
        let avg = AverageRewardTd::new(&x, lambda, sched).unwrap();
        let mut rng = common::rng(seed);
        let (mut sd, mut sa) = (LearnerState::zeros(x.dim()), LearnerState::zeros(x.dim()));
        let mut s = sampler.initial_state(&mut rng);
        for _ in 0..2000 {
            let tr = sampler.step(s, &mut rng);
            disc.step(&mut sd, &tr).unwrap();
            avg.step(&mut sa, &tr).unwrap();
            prop_assert!(sd.e.norm() <= disc.trace_bound() * (1.0 + 1e-12));
            prop_assert!(sa.e.norm() <= avg.trace_bound() * (1.0 + 1e-12));
            s = tr.next_state;
        }
    }
}
