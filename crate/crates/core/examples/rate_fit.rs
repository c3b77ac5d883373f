//! Log-log slope of the mean squared distance over a tail window.

use linear_td::config::{ExperimentConfig, ExplicitMdp, MdpSpec};
use linear_td::experiments::{rate_fit, run_experiment};
use linear_td::mdp::{Policy, TabularMdp};
use linear_td::oracle::{Instance, Setting};
use linear_td::FeatureMatrix;

fn main() -> linear_td::Result<()> {
    // A small two-action chain with tabular features, where A is well
    // conditioned and the 1/t rate is visible quickly.
    let mdp = TabularMdp::new(
        vec![
            vec![vec![0.2, 0.8, 0.0], vec![0.5, 0.0, 0.5]],
            vec![vec![0.0, 0.3, 0.7], vec![0.6, 0.4, 0.0]],
            vec![vec![0.5, 0.25, 0.25], vec![0.0, 0.5, 0.5]],
        ],
        vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![-1.0, 0.5]],
        vec![1.0 / 3.0; 3],
    )?;
    let inst = Instance {
        policy: Policy::uniform(3, 2),
        mdp,
        features: FeatureMatrix::identity(3),
    };
    let mut cfg = ExperimentConfig::boyan(Setting::Discounted { gamma: 0.5 }, 0.0);
    cfg.mdp = MdpSpec::Explicit(ExplicitMdp::from_instance(&inst));
    cfg.schedule.alpha = Some(10.0);
    cfg.schedule.alpha0 = None;
    cfg.schedule.t0 = 1000.0;
    cfg.horizon = 1_000_000;
    let rec = run_experiment(&cfg)?;
    let fit = rate_fit(&rec, 1e5, 1e6)?;
    println!("slope {:.3} +/- {:.3} over {} points", fit.slope, fit.slope_stderr, fit.points);
    Ok(())
}
