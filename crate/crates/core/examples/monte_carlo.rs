//! Seeded Monte-Carlo of the probabilistic-hit simulator with 95%
//! intervals, checked against the chain.
//!
//! ```text
//! cargo run --release --example monte_carlo -- [seeds]
//! ```

use aimd_friendly::chain::{build_chain, monte_carlo, stationary, McConfig, StationaryOptions};
use aimd_friendly::harness::ScenarioConfig;
use aimd_friendly::Result;

fn main() -> Result<()> {
    let seeds: u64 = std::env::args().nth(1).map_or(10, |s| s.parse().expect("seed count"));
    let cfg = ScenarioConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/hits_pair.toml").as_ref())?;
    let m = &cfg.measurement;
    let mc = McConfig {
        seeds: (0..seeds).map(|i| cfg.seed + i).collect(),
        warmup: m.warmup_s,
        interval: m.interval_s,
        samples: m.samples,
    };
    let r = monte_carlo(&cfg.sim_config()?, &mc)?;
    for (label, e) in cfg.group_labels().iter().zip(&r.per_group) {
        println!("group {label}: {e}");
    }
    let ratio = r.group_ratio.expect("two groups");
    println!("B/A over {seeds} seeds: {ratio}");

    let chain = build_chain(&cfg.scenario()?, cfg.bottleneck()?, &cfg.chain.options())?;
    let st = stationary(&chain, &StationaryOptions::default())?;
    let chain_ratio = st.rates_pps[1] / st.rates_pps[0];
    println!(
        "chain B/A {chain_ratio:.4} ({} the interval)",
        if ratio.contains(chain_ratio) { "inside" } else { "outside" }
    );
    Ok(())
}
