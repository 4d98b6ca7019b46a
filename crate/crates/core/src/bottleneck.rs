//! Bottleneck queue models. Each round they turn the aggregate window into
//! a queue and an RTT, and decide which flows see a congestion signal.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::LinkConfig;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueueState {
    /// Standing queue in segments.
    pub queue: f64,
    /// Base RTT plus queuing delay, seconds.
    pub rtt: f64,
    /// Fraction of the round the link is busy.
    pub utilization: f64,
}

/// Fluid queue for an aggregate window: whatever exceeds the BDP sits in
/// the buffer; below the BDP the link idles.
pub fn queue_and_rtt(total_cwnd: f64, link: &LinkConfig) -> QueueState {
    let cap = link.capacity_pkts();
    let bdp = cap * link.base_rtt;
    let queue = (total_cwnd - bdp).max(0.0);
    QueueState {
        queue,
        rtt: link.base_rtt + queue / cap,
        utilization: (total_cwnd / bdp).min(1.0),
    }
}

/// How many packets a tail-drop overflow discards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossesPerEvent {
    /// `n` packets, or every packet past the buffer when the overshoot
    /// exceeds one round of aggregate growth.
    Fixed(u32),
    /// `max(1, round(sum(a) + overshoot))`: the overshoot past the buffer
    /// in the detection round plus one more round of aggregate growth
    /// before the reductions take effect.
    Auto,
}

impl Default for LossesPerEvent {
    fn default() -> Self {
        LossesPerEvent::Fixed(2)
    }
}

impl LossesPerEvent {
    pub fn resolve(self, overshoot: f64, aggregate_growth: f64) -> u32 {
        match self {
            // an overflow that one round of growth cannot explain means the
            // queue stayed over the buffer: every excess packet is dropped
            LossesPerEvent::Fixed(n) if overshoot > aggregate_growth => {
                n.max(1).max(overshoot.ceil() as u32)
            }
            LossesPerEvent::Fixed(n) => n.max(1),
            LossesPerEvent::Auto => ((aggregate_growth + overshoot).round() as u32).max(1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SyncMode {
    /// Every flow reduces at every overflow.
    AllFlowsReduce,
    /// Each discarded packet belongs to a flow drawn in proportion to its
    /// packet rate; a flow reduces once however many packets it lost.
    ProbabilisticHits(LossesPerEvent),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailDropState {
    pub buffer_pkts: f64,
    pub sync: SyncMode,
}

/// Congestion signals raised in one round.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Signal {
    /// Packets lost or marked, per flow.
    pub hits: Vec<u32>,
    /// Flows that will reduce next round.
    pub reduce: Vec<bool>,
}

impl Signal {
    fn new(n: usize) -> Signal {
        Signal {
            hits: vec![0; n],
            reduce: vec![false; n],
        }
    }

    pub fn any_reduce(&self) -> bool {
        self.reduce.iter().any(|&r| r)
    }
}

/// Tail-drop overflow check. Returns `None` while the queue fits in the
/// buffer. `eligible` masks out flows that already reduced this round trip.
pub fn taildrop_check<R: Rng + ?Sized>(
    queue: f64,
    state: &TailDropState,
    rates: &[f64],
    eligible: &[bool],
    aggregate_growth: f64,
    rng: &mut R,
) -> Option<Signal> {
    if queue <= state.buffer_pkts {
        return None;
    }
    let n = rates.len();
    let mut sig = Signal::new(n);
    match state.sync {
        SyncMode::AllFlowsReduce => {
            for i in 0..n {
                sig.hits[i] = 1;
                sig.reduce[i] = eligible[i];
            }
        }
        SyncMode::ProbabilisticHits(policy) => {
            let losses = policy.resolve(queue - state.buffer_pkts, aggregate_growth);
            match WeightedIndex::new(rates) {
                Ok(pick) => {
                    for _ in 0..losses {
                        let i = pick.sample(rng);
                        sig.hits[i] += 1;
                        sig.reduce[i] |= eligible[i];
                    }
                }
                // all rates zero: nobody is sending, nothing to hit
                Err(_) => return None,
            }
        }
    }
    Some(sig)
}

/// PIE controller settings. Gains are per second and act on delays in
/// seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieParams {
    pub target_delay: f64,
    pub update_interval: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for PieParams {
    fn default() -> Self {
        PieParams {
            target_delay: 0.015,
            update_interval: 0.015,
            alpha: 0.125,
            beta: 1.25,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PieState {
    pub params: PieParams,
    /// Drop/mark probability, always in `[0, 1]`.
    pub drop_prob: f64,
    pub last_qdelay: f64,
    /// Simulated time since the last controller update.
    pub since_update: f64,
}

impl PieState {
    pub fn new(params: PieParams) -> PieState {
        PieState {
            params,
            drop_prob: 0.0,
            last_qdelay: 0.0,
            since_update: 0.0,
        }
    }

    /// Lets `elapsed` seconds pass at queuing delay `qdelay`, running one
    /// controller update per elapsed `update_interval`.
    pub fn advance(&mut self, elapsed: f64, qdelay: f64) {
        self.since_update += elapsed;
        while self.since_update >= self.params.update_interval {
            self.since_update -= self.params.update_interval;
            *self = pie_update(self, qdelay);
        }
    }
}

/// One PI step:
/// `p += alpha * (qdelay - target) + beta * (qdelay - last_qdelay)`,
/// clamped to `[0, 1]`.
pub fn pie_update(state: &PieState, qdelay: f64) -> PieState {
    let p = &state.params;
    let delta = p.alpha * (qdelay - p.target_delay) + p.beta * (qdelay - state.last_qdelay);
    PieState {
        drop_prob: (state.drop_prob + delta).clamp(0.0, 1.0),
        last_qdelay: qdelay,
        ..*state
    }
}

/// Chance that at least one of `cwnd` packets is marked at probability `p`.
pub fn mark_probability(p: f64, cwnd: f64) -> f64 {
    1.0 - (1.0 - p).powf(cwnd)
}

/// Independently marks each eligible flow with probability
/// `1 - (1 - p)^cwnd`.
pub fn pie_mark<R: Rng + ?Sized>(
    state: &PieState,
    cwnd: &[f64],
    eligible: &[bool],
    rng: &mut R,
) -> Signal {
    let mut sig = Signal::new(cwnd.len());
    let p = state.drop_prob;
    for (i, &w) in cwnd.iter().enumerate() {
        if p <= 0.0 {
            break;
        }
        // draw for every flow so the stream does not depend on eligibility
        let u: f64 = rng.gen();
        if u < mark_probability(p, w) {
            sig.hits[i] = 1;
            sig.reduce[i] = eligible[i];
        }
    }
    sig
}

/// Which queue discipline sits at the bottleneck.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BottleneckConfig {
    TailDrop(SyncMode),
    /// PIE in front of a buffer that still tail-drops on overflow.
    Pie(PieParams),
}

impl BottleneckConfig {
    pub fn is_stochastic(&self) -> bool {
        !matches!(self, BottleneckConfig::TailDrop(SyncMode::AllFlowsReduce))
    }

    pub fn label(&self) -> &'static str {
        match self {
            BottleneckConfig::TailDrop(_) => "taildrop",
            BottleneckConfig::Pie(_) => "pie",
        }
    }
}

/// What a bottleneck sees at the end of a round.
#[derive(Clone, Copy, Debug)]
pub struct RoundView<'a> {
    pub queue: f64,
    pub qdelay: f64,
    pub duration: f64,
    pub cwnd: &'a [f64],
    pub rates: &'a [f64],
    pub eligible: &'a [bool],
    pub aggregate_growth: f64,
}

/// Live bottleneck state owned by one simulation run.
#[derive(Clone, Debug, PartialEq)]
pub enum Bottleneck {
    TailDrop(TailDropState),
    Pie { pie: PieState, buffer_pkts: f64 },
}

impl Bottleneck {
    pub fn new(config: BottleneckConfig, buffer_pkts: f64) -> Bottleneck {
        match config {
            BottleneckConfig::TailDrop(sync) => Bottleneck::TailDrop(TailDropState { buffer_pkts, sync }),
            BottleneckConfig::Pie(params) => Bottleneck::Pie {
                pie: PieState::new(params),
                buffer_pkts,
            },
        }
    }

    pub fn drop_prob(&self) -> Option<f64> {
        match self {
            Bottleneck::Pie { pie, .. } => Some(pie.drop_prob),
            Bottleneck::TailDrop(_) => None,
        }
    }

    /// Congestion signals for the round just observed, if any.
    pub fn check<R: Rng + ?Sized>(&mut self, view: &RoundView<'_>, rng: &mut R) -> Option<Signal> {
        match self {
            Bottleneck::TailDrop(state) => taildrop_check(
                view.queue,
                state,
                view.rates,
                view.eligible,
                view.aggregate_growth,
                rng,
            ),
            Bottleneck::Pie { pie, buffer_pkts } => {
                let overflow = TailDropState {
                    buffer_pkts: *buffer_pkts,
                    sync: SyncMode::AllFlowsReduce,
                };
                pie.advance(view.duration, view.qdelay);
                if let Some(sig) = taildrop_check(view.queue, &overflow, view.rates, view.eligible, 0.0, rng) {
                    return Some(sig);
                }
                let sig = pie_mark(pie, view.cwnd, view.eligible, rng);
                sig.hits.iter().any(|&h| h > 0).then_some(sig)
            }
        }
    }
}
