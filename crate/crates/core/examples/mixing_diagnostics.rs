//! Mixing time, update-map Lipschitz constant and mean-field drift.

use linear_td::experiments::boyan_instance;
use linear_td::oracle::{Analysis, Setting};
use linear_td::sa::{discounted_update_map, drift_probe, lipschitz_probe, mixing_time, seeded_rng, MarkovDriver, TdDriver};
use linear_td::TrajectorySampler;

fn main() -> linear_td::Result<()> {
    let inst = boyan_instance();
    let (gamma, lambda) = (0.9, 0.8);
    let a = Analysis::new(&inst, Setting::Discounted { gamma }, lambda, 1.0, Default::default())?;
    for eps in [0.1, 0.01, 0.001] {
        println!("mixing time at TV accuracy {eps}: {}", mixing_time(&a.chain.p, eps)?);
    }

    let mut driver = TdDriver::new(TrajectorySampler::new(&inst.mdp, &inst.policy)?, a.features.clone(), gamma * lambda);
    let mut rng = seeded_rng(0);
    driver.reset(&mut rng);
    let samples: Vec<_> = (0..1000).map(|_| driver.advance(&mut rng).clone()).collect();
    let h = discounted_update_map(a.features.clone(), gamma);
    let cx = a.features.max_row_norm();
    let bound = (1.0 + gamma) * cx * cx / (1.0 - gamma * lambda);
    println!("Lipschitz estimate {:.3} (bound {bound:.3})", lipschitz_probe(&h, a.dim(), &samples, 50, 1));

    let sys = a.system.clone();
    let (ratio, _) = drift_probe(&a.solution, |w| sys.mean_field(w), 500, 2);
    println!("drift ratio {ratio:.3e} vs 2 x margin {:.3e}", 2.0 * a.margin());
    Ok(())
}
