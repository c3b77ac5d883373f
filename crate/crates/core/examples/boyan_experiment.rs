//! Full Monte Carlo experiment on the 15-state chain, written as CSV plus
//! metadata. Pass an output directory as the first argument.

use std::path::PathBuf;

use linear_td::config::ExperimentConfig;
use linear_td::experiments::{run_experiment, write_outputs};
use linear_td::oracle::Setting;

fn main() -> linear_td::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/boyan".into()));
    for lambda in [0.0, 0.4, 0.8] {
        let mut cfg = ExperimentConfig::boyan(Setting::Discounted { gamma: 0.9 }, lambda);
        cfg.horizon = 200_000;
        let rec = run_experiment(&cfg)?;
        let (csv, _) = write_outputs(&rec, &out, &format!("lambda{lambda}"))?;
        let (first, last) = (rec.mean_d2[0], *rec.mean_d2.last().unwrap());
        println!("lambda={lambda}: d^2 {first:.1} -> {last:.1}, wrote {}", csv.display());
    }
    Ok(())
}
