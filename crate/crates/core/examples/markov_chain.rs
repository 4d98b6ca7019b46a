//! Congestion-event Markov chain for probabilistic hits: stationary
//! distribution and long-run rates.
//!
//! ```text
//! cargo run --release --example markov_chain -- [config.toml]
//! ```

use aimd_friendly::chain::{build_chain, stationary, StationaryOptions};
use aimd_friendly::harness::ScenarioConfig;
use aimd_friendly::Result;

fn main() -> Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/hits_pair.toml").into());
    let cfg = ScenarioConfig::load(path.as_ref())?;
    let scenario = cfg.scenario()?;
    let chain = build_chain(&scenario, cfg.bottleneck()?, &cfg.chain.options())?;
    let st = stationary(&chain, &StationaryOptions::default())?;
    println!(
        "{} states, {} recurrent, residual {:.1e} after {} iterations",
        chain.len(),
        st.class.len(),
        st.residual,
        st.iterations
    );

    let mut top: Vec<(usize, f64)> = st.class.iter().copied().zip(st.probabilities.iter().copied()).collect();
    top.sort_by(|x, y| y.1.total_cmp(&x.1));
    println!("most likely event states (windows | just reduced):");
    for (s, p) in top.iter().take(8) {
        println!("  {:<16} {p:.4}", chain.states[*s].label(chain.quantum));
    }
    for (i, f) in scenario.flows().iter().enumerate() {
        println!(
            "flow {i} {:<6} {:>9.1} pkt/s, {:.4} of fair share",
            f.kind.label(),
            st.rates_pps[i],
            st.ratio_to_fair[i]
        );
    }
    Ok(())
}
