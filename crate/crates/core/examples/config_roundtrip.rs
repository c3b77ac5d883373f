//! Builds a config, applies dotted overrides and reads it back from JSON.

use linear_td::config::{apply_overrides, ExperimentConfig};
use linear_td::experiments::config_hash;
use linear_td::oracle::Setting;

fn main() -> linear_td::Result<()> {
    let cfg = ExperimentConfig::boyan(Setting::AverageReward, 0.8);
    let mut value: serde_json::Value = serde_json::from_str(&cfg.to_json()).expect("valid JSON");
    apply_overrides(&mut value, &["schedule.c_beta=100".into(), "horizon=50000".into()])?;
    let back = ExperimentConfig::from_value(value)?;
    back.validate()?;
    println!("c_beta {} -> {}", cfg.schedule.c_beta, back.schedule.c_beta);
    println!("hash {} -> {}", config_hash(&cfg), config_hash(&back));
    println!("{}", back.to_json());
    Ok(())
}
