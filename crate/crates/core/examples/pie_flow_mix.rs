//! Reno and C-Reno mixes behind PIE. Early random drops break the
//! synchronization, so each mix is summarized by P1, mean and P99.
//!
//! ```text
//! cargo run --release --example pie_flow_mix
//! ```

use aimd_friendly::harness::{run_grid, GridConfig};
use aimd_friendly::Result;

fn main() -> Result<()> {
    let grid = GridConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/pie_mix.toml").as_ref())?;
    println!("{:<28} {:<6} {:>5} {:>7} {:>7} {:>7}", "cell", "group", "flows", "P1", "mean", "P99");
    for r in run_grid(&grid)? {
        if !r.error.is_empty() {
            println!("{:<28} {:<6} {}", r.scenario_id, r.flow_group, r.error);
            continue;
        }
        println!(
            "{:<28} {:<6} {:>5} {:>7.3} {:>7.3} {:>7.3}",
            r.scenario_id,
            r.flow_group,
            r.n_flows,
            r.p1.unwrap_or(f64::NAN),
            r.mean.unwrap_or(f64::NAN),
            r.p99.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
