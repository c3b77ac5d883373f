//! Average-reward TD(λ): tracks Ĵ and the distance to W̄* separately and
//! through the combined identity.

use linear_td::experiments::boyan_instance;
use linear_td::oracle::{Analysis, Setting};
use linear_td::sa::seeded_rng;
use linear_td::{AverageRewardTd, LearnerState, LrSchedule, TrajectorySampler};

fn main() -> linear_td::Result<()> {
    let inst = boyan_instance();
    // c_β = 10 is the smallest grid value with a positive margin here.
    let (lambda, c_beta) = (0.4, 10.0);
    let a = Analysis::new(&inst, Setting::AverageReward, lambda, c_beta, Default::default())?;
    let tilde = a.tilde.as_ref().expect("average-reward analysis");
    println!("J = {:.6}, margin of A~ = {:.3e}", a.chain.avg_reward, tilde.margin());

    let sampler = TrajectorySampler::new(&inst.mdp, &inst.policy)?;
    let td = AverageRewardTd::new(&inst.features, lambda, LrSchedule::from_initial_step(0.01, 1e4, 1.0, c_beta)?)?;
    let mut rng = seeded_rng(1);
    let mut st = LearnerState::zeros(inst.features.dim());
    let mut s = sampler.initial_state(&mut rng);
    for t in 1..=500_000u64 {
        let tr = sampler.step(s, &mut rng);
        td.step(&mut st, &tr)?;
        s = tr.next_state;
        if t % 50_000 == 0 {
            let j2 = (st.j_hat - a.chain.avg_reward).powi(2);
            let d2 = a.distance_sq(&st.w);
            let joint = a.combined_distance_sq(st.j_hat, &st.w).unwrap();
            println!("{t:>7}  (J_hat-J)^2 = {j2:.3e}  d^2 = {d2:.4}  sum - joint = {:.1e}", j2 + d2 - joint);
        }
    }
    Ok(())
}
