//! Domain types shared by the analytic, simulation and chain modules.
//!
//! Internally everything is in segments (packets) and seconds. Bits and
//! bytes only appear in [`LinkConfig`], at the configuration boundary.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Additive increase `a` (segments per round trip) and multiplicative
/// decrease factor `b` of one AIMD flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AimdParams {
    a: f64,
    b: f64,
}

impl AimdParams {
    pub const RENO: AimdParams = AimdParams { a: 1.0, b: 0.5 };

    pub fn new(a: f64, b: f64) -> Result<AimdParams> {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::DecreaseOutOfRange(b.to_string()));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::IncreaseNotPositive(a.to_string()));
        }
        Ok(AimdParams { a, b })
    }

    /// An AIMD flow with decrease factor `b` and the additive increase that
    /// makes it Reno-friendly, `3(1-b)/(1+b)`.
    pub fn reno_friendly(b: f64) -> Result<AimdParams> {
        let a = crate::friendliness::reno_friendly_ai_f64(b)?;
        AimdParams::new(a, b)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn with_a(self, a: f64) -> Result<AimdParams> {
        AimdParams::new(a, self.b)
    }
}

/// Which algorithm a flow stands for. Only used for labeling, except that
/// `Reno` pins the parameters to `(1, 1/2)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CcaKind {
    Reno,
    CReno,
    Tagged(String),
}

impl CcaKind {
    pub fn label(&self) -> &str {
        match self {
            CcaKind::Reno => "reno",
            CcaKind::CReno => "creno",
            CcaKind::Tagged(t) => t,
        }
    }

    pub fn parse(s: &str) -> CcaKind {
        match s.to_ascii_lowercase().as_str() {
            "reno" => CcaKind::Reno,
            "creno" | "c-reno" => CcaKind::CReno,
            _ => CcaKind::Tagged(s.to_string()),
        }
    }
}

impl fmt::Display for CcaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How deep the bottleneck buffer is.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BufferPolicy {
    /// Holds `C * horizon` bits, i.e. `horizon` seconds of drain time.
    SizedByTime(f64),
    /// A fixed number of segments.
    SizedByPackets(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    /// Link rate in bits per second.
    pub capacity_bps: f64,
    /// Segment size in bytes.
    pub mss: u32,
    /// Two-way base delay in seconds.
    pub base_rtt: f64,
    pub buffer: BufferPolicy,
}

impl LinkConfig {
    pub fn new(capacity_bps: f64, mss: u32, base_rtt: f64, buffer: BufferPolicy) -> LinkConfig {
        LinkConfig {
            capacity_bps,
            mss,
            base_rtt,
            buffer,
        }
    }

    /// Convenience constructor: rate in Mb/s, base RTT in ms, 1500-byte
    /// segments.
    pub fn mbps_ms(rate_mbps: f64, base_rtt_ms: f64, buffer: BufferPolicy) -> LinkConfig {
        LinkConfig::new(rate_mbps * 1e6, 1500, base_rtt_ms / 1e3, buffer)
    }

    pub fn capacity_pkts(&self) -> f64 {
        capacity_pkts(self)
    }

    pub fn bdp_pkts(&self) -> f64 {
        self.capacity_pkts() * self.base_rtt
    }

    /// Buffer depth in segments (real-valued for time-sized buffers).
    pub fn buffer_pkts(&self) -> f64 {
        match self.buffer {
            BufferPolicy::SizedByTime(horizon) => self.capacity_pkts() * horizon,
            BufferPolicy::SizedByPackets(n) => n,
        }
    }

    /// Time the link needs to drain a full buffer.
    pub fn buffer_seconds(&self) -> f64 {
        self.buffer_pkts() / self.capacity_pkts()
    }

    fn validate(&self) -> Result<()> {
        if !(self.capacity_bps > 0.0 && self.capacity_bps.is_finite()) {
            return Err(Error::ZeroCapacity);
        }
        if self.mss == 0 {
            return Err(Error::ZeroSegmentSize);
        }
        if !(self.base_rtt > 0.0 && self.base_rtt.is_finite()) {
            return Err(Error::BadBaseRtt);
        }
        if let BufferPolicy::SizedByTime(h) = self.buffer {
            if !(h > 0.0) {
                return Err(Error::BadBufferHorizon(h));
            }
        }
        if !(self.buffer_pkts() >= 1.0) {
            return Err(Error::EmptyBuffer);
        }
        Ok(())
    }
}

/// Link rate in segments per second: `C / (8 * mss)`.
pub fn capacity_pkts(link: &LinkConfig) -> f64 {
    link.capacity_bps / (8.0 * f64::from(link.mss))
}

/// `count` identical flows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowGroup {
    pub kind: CcaKind,
    pub params: AimdParams,
    pub count: usize,
}

impl FlowGroup {
    pub fn new(kind: CcaKind, params: AimdParams, count: usize) -> FlowGroup {
        FlowGroup {
            kind,
            params,
            count,
        }
    }

    pub fn reno(count: usize) -> FlowGroup {
        FlowGroup::new(CcaKind::Reno, AimdParams::RENO, count)
    }

    /// C-Reno with decrease factor `b` and the Reno-friendly increase.
    pub fn creno(b: f64, count: usize) -> Result<FlowGroup> {
        Ok(FlowGroup::new(CcaKind::CReno, AimdParams::reno_friendly(b)?, count))
    }
}

/// One flow after expanding the groups.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSpec {
    pub group: usize,
    pub kind: CcaKind,
    pub params: AimdParams,
}

/// A validated link plus flow population with the derived quantities
/// precomputed.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    link: LinkConfig,
    groups: Vec<FlowGroup>,
    flows: Vec<FlowSpec>,
    capacity_pkts: f64,
    bdp_pkts: f64,
    buffer_pkts: f64,
}

impl Scenario {
    pub fn link(&self) -> &LinkConfig {
        &self.link
    }

    pub fn groups(&self) -> &[FlowGroup] {
        &self.groups
    }

    pub fn flows(&self) -> &[FlowSpec] {
        &self.flows
    }

    pub fn n_flows(&self) -> usize {
        self.flows.len()
    }

    /// Segments per second.
    pub fn capacity_pkts(&self) -> f64 {
        self.capacity_pkts
    }

    pub fn bdp_pkts(&self) -> f64 {
        self.bdp_pkts
    }

    pub fn buffer_pkts(&self) -> f64 {
        self.buffer_pkts
    }

    /// Total window at which the buffer overflows: `BDP + B`.
    pub fn overflow_pkts(&self) -> f64 {
        self.bdp_pkts + self.buffer_pkts
    }

    /// A flow's fair share, `C / N`, in segments per second.
    pub fn fair_share_pkts(&self) -> f64 {
        self.capacity_pkts / self.flows.len() as f64
    }

    /// Flow ids belonging to group `g`.
    pub fn group_members(&self, g: usize) -> impl Iterator<Item = usize> + '_ {
        self.flows
            .iter()
            .enumerate()
            .filter(move |(_, f)| f.group == g)
            .map(|(i, _)| i)
    }
}

/// Checks every parameter invariant and precomputes capacity, BDP and
/// buffer depth in segments.
pub fn validate_scenario(link: LinkConfig, groups: Vec<FlowGroup>) -> Result<Scenario> {
    link.validate()?;
    let mut flows = Vec::new();
    for (g, group) in groups.iter().enumerate() {
        // re-run the parameter checks: the fields may come from deserialization
        let p = AimdParams::new(group.params.a, group.params.b)?;
        if group.kind == CcaKind::Reno && p != AimdParams::RENO {
            return Err(Error::RenoParams { a: p.a, b: p.b });
        }
        flows.extend((0..group.count).map(|_| FlowSpec {
            group: g,
            kind: group.kind.clone(),
            params: p,
        }));
    }
    if flows.is_empty() {
        return Err(Error::NoFlows);
    }
    let capacity_pkts = link.capacity_pkts();
    Ok(Scenario {
        capacity_pkts,
        bdp_pkts: capacity_pkts * link.base_rtt,
        buffer_pkts: link.buffer_pkts(),
        link,
        groups,
        flows,
    })
}

/// Mutable per-flow state of the simulator.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub kind: CcaKind,
    pub params: AimdParams,
    /// Congestion window in segments.
    pub cwnd: f64,
    /// Reduce at the start of the next round.
    pub pending_reduction: bool,
}

/// Losses attributed to one flow within a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossEvent {
    pub flow: usize,
    pub count: u32,
}

/// Everything observed during one round trip.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub round: u64,
    /// Simulated time at the start of the round.
    pub t_start: f64,
    pub cwnd: Vec<f64>,
    /// Standing queue in segments.
    pub queue: f64,
    /// Round duration: base RTT plus queuing delay.
    pub rtt: f64,
    /// Per-flow packet rate in segments per second.
    pub rate: Vec<f64>,
    /// Fraction of the link kept busy.
    pub utilization: f64,
    /// Flows that applied a multiplicative decrease this round.
    pub reduced: Vec<bool>,
    /// Congestion signals raised at the end of this round; the flows react
    /// in the next one.
    pub loss_events: Vec<LossEvent>,
    /// The bottleneck signaled congestion this round.
    pub congestion: bool,
}

impl RoundRecord {
    pub fn total_cwnd(&self) -> f64 {
        self.cwnd.iter().sum()
    }
}

/// Statistics of one sawtooth cycle (or of one repetition of a periodic
/// pattern of cycles, see `events`).
#[derive(Clone, Debug, PartialEq)]
pub struct CycleStats {
    /// Additive-increase rounds per congestion event (`J`). The reduction
    /// round is not counted, so `a * J = peak * (1 - b)` holds exactly in
    /// a converged synchronized cycle. Fractional when the repeating
    /// pattern spans several events of differing length.
    pub rounds_per_cycle: f64,
    /// Rounds covered, including reduction rounds.
    pub span_rounds: usize,
    /// Congestion events covered (1 unless the steady state alternates).
    pub events: usize,
    /// Mean window at the covered congestion events, per flow.
    pub peak_window: Vec<f64>,
    /// Sum of the window over every covered round, per flow.
    pub packets_per_cycle: Vec<f64>,
    /// Sum of the round durations.
    pub cycle_duration: f64,
    /// Throughput over the cycle relative to `C / N`.
    pub normalized_rate: Vec<f64>,
}
