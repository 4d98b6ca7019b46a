//! Synchronized sawtooth of Reno against C-Reno in a deep buffer: cycle
//! shape, sampled fairness, a per-round CSV and an SVG plot.
//!
//! ```text
//! cargo run --release --example sync_sawtooth -- [config.toml] [out_dir]
//! ```

use std::fs::File;
use std::path::PathBuf;

use aimd_friendly::harness::{render_plots, run_scenario, ScenarioConfig};
use aimd_friendly::sim::{detect_cycle, write_trace_csv};
use aimd_friendly::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/deep_pair.toml").into());
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("aimd-sawtooth"));
    std::fs::create_dir_all(&out).expect("output directory");

    let run = run_scenario(&ScenarioConfig::load(config.as_ref())?)?;
    let cycle = detect_cycle(&run.trace)?;
    println!("increase rounds per cycle: {:.1}", cycle.rounds_per_cycle);
    for (i, f) in run.scenario.flows().iter().enumerate() {
        println!(
            "flow {i} {:<6} peak {:>7.2} pkt, {:>8.1} pkt/cycle, cycle rate {:.4}",
            f.kind.label(),
            cycle.peak_window[i],
            cycle.packets_per_cycle[i],
            cycle.normalized_rate[i]
        );
    }
    for g in &run.summary.groups {
        println!("group {} sampled: P1 {:.4} mean {:.4} P99 {:.4}", g.label, g.p1, g.mean, g.p99);
    }

    let csv = out.join("trace.csv");
    write_trace_csv(&run.trace, File::create(&csv).expect("trace file"))?;
    for p in render_plots(&run.trace, &[], &out, "Reno vs C-Reno")? {
        println!("wrote {}", p.display());
    }
    println!("wrote {}", csv.display());
    Ok(())
}
