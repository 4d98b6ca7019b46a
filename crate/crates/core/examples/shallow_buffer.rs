//! A buffer too small to keep the link busy after a reduction. Both flows
//! fall below their fair share but keep the same ratio as with a deep
//! buffer.
//!
//! ```text
//! cargo run --release --example shallow_buffer
//! ```

use aimd_friendly::bottleneck::{BottleneckConfig, SyncMode};
use aimd_friendly::model::{validate_scenario, BufferPolicy, FlowGroup, LinkConfig};
use aimd_friendly::sim::{self, SimConfig};
use aimd_friendly::Result;

fn main() -> Result<()> {
    for (name, rtt_ms, buffer_s) in [("deep", 10.0, 0.2), ("shallow", 50.0, 0.011)] {
        let link = LinkConfig::mbps_ms(40.0, rtt_ms, BufferPolicy::SizedByTime(buffer_s));
        let s = validate_scenario(link, vec![FlowGroup::reno(1), FlowGroup::creno(0.7, 1)?])?;
        let trace = sim::run(&SimConfig::new(s, BottleneckConfig::TailDrop(SyncMode::AllFlowsReduce)))?;
        let c = sim::detect_cycle(&trace)?;
        let idle = trace.records.iter().rev().take(c.span_rounds).filter(|r| r.utilization < 1.0).count();
        println!(
            "{name:<8} BDP {:>6.1} pkt, buffer {:>5.1} pkt: Reno {:.4}, C-Reno {:.4}, ratio {:.4}, {idle} idle rounds per cycle",
            trace.capacity_pkts * trace.base_rtt,
            link.buffer_pkts(),
            c.normalized_rate[0],
            c.normalized_rate[1],
            c.normalized_rate[1] / c.normalized_rate[0]
        );
    }
    Ok(())
}
