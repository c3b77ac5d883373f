//! Prints the oracle summary for the 15-state chain in both settings.
//!
//! ```text
//! cargo run --example oracle_report
//! ```

use linear_td::config::VerifyConfig;
use linear_td::experiments::boyan_instance;
use linear_td::oracle::{Analysis, Setting};
use linear_td::report::OracleReport;

fn main() -> linear_td::Result<()> {
    let inst = boyan_instance();
    let grid = VerifyConfig::default().c_beta_grid;
    for setting in [Setting::Discounted { gamma: 0.9 }, Setting::AverageReward] {
        let a = Analysis::new(&inst, setting, 0.4, 1.0, Default::default())?;
        println!("{}", OracleReport::new(&a, &grid)?.to_text());
    }
    Ok(())
}
