//! Sweeps link rates and base RTTs in parallel, writes the summary CSV and
//! a whisker plot.
//!
//! ```text
//! cargo run --release --example grid_sweep -- [grid.toml] [out_dir]
//! ```

use std::fs::File;
use std::path::PathBuf;

use aimd_friendly::harness::{plot_whiskers, run_grid, write_summary_csv, GridConfig};
use aimd_friendly::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/taildrop_grid.toml").into());
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("aimd-grid"));
    std::fs::create_dir_all(&out).expect("output directory");

    let rows = run_grid(&GridConfig::load(config.as_ref())?)?;
    let flagged = rows.iter().filter(|r| !r.error.is_empty()).count();
    let csv = out.join("summary.csv");
    write_summary_csv(&rows, File::create(&csv).expect("summary file"))?;
    plot_whiskers(&rows, &out.join("whiskers.svg"), "normalized rate")?;
    println!("{} rows ({flagged} flagged)", rows.len());
    println!("wrote {} and whiskers.svg", csv.display());
    Ok(())
}
