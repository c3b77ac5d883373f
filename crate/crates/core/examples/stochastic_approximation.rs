//! Drives the generic Markovian SA runner with the TD update map and compares
//! it with the deterministic mean-field path.

use linear_td::experiments::boyan_instance;
use linear_td::oracle::{Analysis, Setting};
use linear_td::sa::{discounted_update_map, run_mean_field, run_sa, AffineMap, SaProblem, TdDriver};
use linear_td::{LrSchedule, TrajectorySampler};
use nalgebra::DVector;

fn main() -> linear_td::Result<()> {
    let inst = boyan_instance();
    let (gamma, lambda) = (0.9, 0.0);
    let a = Analysis::new(&inst, Setting::Discounted { gamma }, lambda, 1.0, Default::default())?;
    let sched = LrSchedule::from_initial_step(0.01, 1e4, 1.0, 1.0)?;
    let dim = inst.features.dim();
    let horizon = 100_000;

    let mut problem = SaProblem {
        update_map: discounted_update_map(a.features.clone(), gamma),
        driver: TdDriver::new(TrajectorySampler::new(&inst.mdp, &inst.policy)?, a.features.clone(), gamma * lambda),
        target_set: a.solution.clone(),
        mean_field: None,
        initial: DVector::zeros(dim),
    };
    let noisy = run_sa(&mut problem, &sched, horizon, 7, horizon / 10)?;

    let map = AffineMap::new(a.system.a.clone(), a.system.b.clone())?;
    let smooth = run_mean_field(&map, &a.solution, &sched, &DVector::zeros(dim), horizon, horizon / 10);

    println!("{:>7}  {:>12}  {:>12}", "t", "SA  M(w)", "ODE M(w)");
    for ((t, l), (_, m)) in noisy.points.iter().zip(&smooth) {
        println!("{t:>7}  {l:>12.4}  {m:>12.4}");
    }
    Ok(())
}
