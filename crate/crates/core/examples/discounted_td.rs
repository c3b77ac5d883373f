//! Runs discounted TD(λ) by hand and tracks the distance to the solution set.

use linear_td::experiments::boyan_instance;
use linear_td::oracle::{Analysis, Setting};
use linear_td::sa::seeded_rng;
use linear_td::{DiscountedTd, LearnerState, LrSchedule, TrajectorySampler};

fn main() -> linear_td::Result<()> {
    let inst = boyan_instance();
    let (gamma, lambda) = (0.9, 0.4);
    let a = Analysis::new(&inst, Setting::Discounted { gamma }, lambda, 1.0, Default::default())?;
    let sampler = TrajectorySampler::new(&inst.mdp, &inst.policy)?;
    let td = DiscountedTd::new(&inst.features, gamma, lambda, LrSchedule::from_initial_step(0.01, 1e4, 1.0, 1.0)?)?;

    let mut rng = seeded_rng(0);
    let mut st = LearnerState::zeros(inst.features.dim());
    let mut s = sampler.initial_state(&mut rng);
    println!("solution set has dimension {}", a.solution.dim());
    for t in 1..=200_000u64 {
        let tr = sampler.step(s, &mut rng);
        td.step(&mut st, &tr)?;
        s = tr.next_state;
        if t.is_power_of_two() || t == 200_000 {
            println!("{t:>7}  d^2 = {:.4}", a.distance_sq(&st.w));
        }
    }
    let values = inst.features.matrix() * &st.w;
    println!("max value error {:.4}", (values - a.value_estimate()).amax());
    Ok(())
}
