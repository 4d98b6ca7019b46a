//! Round-based fluid simulator.
//!
//! Every flow advances one round trip at a time: a flow flagged in the
//! previous round multiplies its window by `b`, every other flow adds `a`.
//! The aggregate window then sets the queue and RTT, and the bottleneck
//! decides who gets flagged for the next round.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bottleneck::{queue_and_rtt, Bottleneck, BottleneckConfig, RoundView};
use crate::error::{Error, Result};
use crate::model::{CcaKind, CycleStats, FlowState, LinkConfig, LossEvent, RoundRecord, Scenario};

/// Starting windows.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialWindows {
    /// Every flow starts at the same window.
    Uniform(f64),
    Explicit(Vec<f64>),
    /// Independent uniform draws in `[1, max]` from the run's RNG.
    Random { max: f64 },
}

impl Default for InitialWindows {
    fn default() -> Self {
        InitialWindows::Uniform(1.0)
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub bottleneck: BottleneckConfig,
    pub max_rounds: u64,
    /// Relative tolerance when comparing window vectors at congestion
    /// events (deterministic modes).
    pub convergence_epsilon: f64,
    /// Longest repeating pattern of congestion events recognized as a
    /// steady state.
    pub max_period: usize,
    /// Congestion events discarded before a stochastic run counts as
    /// settled.
    pub warmup_events: usize,
    /// Simulated seconds to keep running after the run has settled.
    pub measure_time: f64,
    pub seed: u64,
    pub initial: InitialWindows,
}

impl SimConfig {
    pub fn new(scenario: Scenario, bottleneck: BottleneckConfig) -> SimConfig {
        SimConfig {
            scenario,
            bottleneck,
            max_rounds: 2_000_000,
            convergence_epsilon: 1e-9,
            max_period: 64,
            warmup_events: 20,
            measure_time: 0.0,
            seed: 0,
            initial: InitialWindows::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> SimConfig {
        self.seed = seed;
        self
    }

    pub fn with_measure_time(mut self, seconds: f64) -> SimConfig {
        self.measure_time = seconds;
        self
    }

    pub fn with_initial(mut self, initial: InitialWindows) -> SimConfig {
        self.initial = initial;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_rounds == 0 {
            return Err(Error::Config("max_rounds must be >= 1".into()));
        }
        if !(self.convergence_epsilon > 0.0) {
            return Err(Error::Config("convergence epsilon must be > 0".into()));
        }
        if self.max_period == 0 {
            return Err(Error::Config("max_period must be >= 1".into()));
        }
        if !(self.measure_time >= 0.0) {
            return Err(Error::Config("measure time must be >= 0".into()));
        }
        if let InitialWindows::Explicit(w) = &self.initial {
            if w.len() != self.scenario.n_flows() || w.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::Config(
                    "explicit initial windows: one positive value per flow".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Advances every flow by one round trip and asks the bottleneck for the
/// congestion signals that take effect next round.
pub fn step_round<R: Rng + ?Sized>(
    flows: &mut [FlowState],
    bottleneck: &mut Bottleneck,
    link: &LinkConfig,
    round: u64,
    t_start: f64,
    rng: &mut R,
) -> RoundRecord {
    let n = flows.len();
    let mut reduced = vec![false; n];
    for (f, red) in flows.iter_mut().zip(reduced.iter_mut()) {
        if f.pending_reduction {
            f.cwnd *= f.params.b();
            f.pending_reduction = false;
            *red = true;
        } else {
            f.cwnd += f.params.a();
        }
    }
    let cwnd: Vec<f64> = flows.iter().map(|f| f.cwnd).collect();
    let total: f64 = cwnd.iter().sum();
    let q = queue_and_rtt(total, link);
    // with an idle link rtt == base_rtt, so this is cwnd / base_rtt there
    let rate: Vec<f64> = cwnd.iter().map(|w| w / q.rtt).collect();
    let eligible: Vec<bool> = reduced.iter().map(|r| !r).collect();
    let aggregate_growth = flows.iter().map(|f| f.params.a()).sum();

    let view = RoundView {
        queue: q.queue,
        qdelay: q.rtt - link.base_rtt,
        duration: q.rtt,
        cwnd: &cwnd,
        rates: &rate,
        eligible: &eligible,
        aggregate_growth,
    };
    let mut loss_events = Vec::new();
    let mut congestion = false;
    if let Some(sig) = bottleneck.check(&view, rng) {
        congestion = sig.any_reduce();
        for (i, f) in flows.iter_mut().enumerate() {
            if sig.hits[i] > 0 {
                loss_events.push(LossEvent {
                    flow: i,
                    count: sig.hits[i],
                });
            }
            f.pending_reduction = sig.reduce[i];
        }
    }

    RoundRecord {
        round,
        t_start,
        cwnd,
        queue: q.queue,
        rtt: q.rtt,
        rate,
        utilization: q.utilization,
        reduced,
        loss_events,
        congestion,
    }
}

/// A live run that can be stepped without storing the trace.
pub struct Simulation {
    link: LinkConfig,
    flows: Vec<FlowState>,
    bottleneck: Bottleneck,
    rng: ChaCha8Rng,
    round: u64,
    time: f64,
}

impl Simulation {
    pub fn new(config: &SimConfig) -> Result<Simulation> {
        config.validate()?;
        let scenario = &config.scenario;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let start: Vec<f64> = match &config.initial {
            InitialWindows::Uniform(w) => vec![*w; scenario.n_flows()],
            InitialWindows::Explicit(w) => w.clone(),
            InitialWindows::Random { max } => (0..scenario.n_flows())
                .map(|_| rng.gen_range(1.0..=max.max(1.0)))
                .collect(),
        };
        let flows = scenario
            .flows()
            .iter()
            .zip(start)
            .map(|(f, cwnd)| FlowState {
                kind: f.kind.clone(),
                params: f.params,
                cwnd,
                pending_reduction: false,
            })
            .collect();
        Ok(Simulation {
            link: *scenario.link(),
            flows,
            bottleneck: Bottleneck::new(config.bottleneck, scenario.buffer_pkts()),
            rng,
            round: 0,
            time: 0.0,
        })
    }

    pub fn step(&mut self) -> RoundRecord {
        let rec = step_round(
            &mut self.flows,
            &mut self.bottleneck,
            &self.link,
            self.round,
            self.time,
            &mut self.rng,
        );
        self.round += 1;
        self.time += rec.rtt;
        rec
    }

    pub fn flows(&self) -> &[FlowState] {
        &self.flows
    }

    pub fn bottleneck(&self) -> &Bottleneck {
        &self.bottleneck
    }

    pub fn time(&self) -> f64 {
        self.time
    }
}

/// Rounds `start..=end` repeat forever: the window vector at the
/// congestion event ending round `end` equals the one `period` events
/// earlier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergedCycle {
    pub start: usize,
    pub end: usize,
    pub period: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Settled {
    /// Deterministic run reached a periodic steady state.
    Converged(ConvergedCycle),
    /// Stochastic run got past its warm-up events.
    WarmedUp,
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome {
    Settled {
        how: Settled,
        /// Index of the record after which the run counts as settled.
        round: usize,
        /// Time at the end of that round.
        time: f64,
    },
    /// `max_rounds` elapsed first.
    NotConverged,
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub records: Vec<RoundRecord>,
    pub kinds: Vec<CcaKind>,
    pub groups: Vec<usize>,
    pub capacity_pkts: f64,
    pub base_rtt: f64,
    /// Per-flow packets delivered over the whole run.
    pub cumulative_packets: Vec<f64>,
    pub cumulative_time: f64,
    /// Indices of records in which the bottleneck signaled congestion.
    pub events: Vec<usize>,
    pub outcome: Outcome,
}

impl Trace {
    pub fn n_flows(&self) -> usize {
        self.kinds.len()
    }

    pub fn fair_share_pkts(&self) -> f64 {
        self.capacity_pkts / self.n_flows() as f64
    }

    /// End time of the last recorded round.
    pub fn end_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t_start + r.rtt)
    }

    pub fn settled_time(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Settled { time, .. } => Some(time),
            Outcome::NotConverged => None,
        }
    }

    pub fn converged_cycle(&self) -> Option<ConvergedCycle> {
        match self.outcome {
            Outcome::Settled {
                how: Settled::Converged(c),
                ..
            } => Some(c),
            _ => None,
        }
    }
}

fn same_state(a: &[f64], b: &[f64], eps: f64) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= eps * x.abs().max(y.abs()))
}

/// Runs until the steady state is reached (or the warm-up is over), then
/// for `measure_time` more seconds. Running out of `max_rounds` is
/// reported through [`Outcome::NotConverged`], not as an error.
pub fn run(config: &SimConfig) -> Result<Trace> {
    let mut sim = Simulation::new(config)?;
    let stochastic = config.bottleneck.is_stochastic();
    let scenario = &config.scenario;
    let n = scenario.n_flows();

    let mut records: Vec<RoundRecord> = Vec::new();
    let mut events: Vec<usize> = Vec::new();
    let mut cumulative = vec![0.0; n];
    let mut outcome = Outcome::NotConverged;

    while (records.len() as u64) < config.max_rounds {
        let rec = sim.step();
        for (c, w) in cumulative.iter_mut().zip(&rec.cwnd) {
            *c += w;
        }
        let idx = records.len();
        let t_end = rec.t_start + rec.rtt;
        if rec.congestion {
            events.push(idx);
        }
        let is_event = rec.congestion;
        records.push(rec);

        match outcome {
            Outcome::NotConverged if is_event => {
                let how = if stochastic {
                    (events.len() >= config.warmup_events.max(1)).then_some(Settled::WarmedUp)
                } else {
                    find_period(&records, &events, config)
                };
                if let Some(how) = how {
                    outcome = Outcome::Settled {
                        how,
                        round: idx,
                        time: t_end,
                    };
                }
            }
            Outcome::Settled { time, .. } if t_end >= time + config.measure_time => break,
            _ => {}
        }
        if let Outcome::Settled { time, .. } = outcome {
            if config.measure_time == 0.0 || t_end >= time + config.measure_time {
                break;
            }
        }
    }

    Ok(Trace {
        kinds: scenario.flows().iter().map(|f| f.kind.clone()).collect(),
        groups: scenario.flows().iter().map(|f| f.group).collect(),
        capacity_pkts: scenario.capacity_pkts(),
        base_rtt: scenario.link().base_rtt,
        cumulative_packets: cumulative,
        cumulative_time: sim.time(),
        records,
        events,
        outcome,
    })
}

fn find_period(records: &[RoundRecord], events: &[usize], config: &SimConfig) -> Option<Settled> {
    let last = *events.last()?;
    let now = &records[last].cwnd;
    (1..=config.max_period.min(events.len() - 1)).find_map(|p| {
        let earlier = events[events.len() - 1 - p];
        same_state(&records[earlier].cwnd, now, config.convergence_epsilon).then_some(
            Settled::Converged(ConvergedCycle {
                start: earlier + 1,
                end: last,
                period: p,
            }),
        )
    })
}

/// Statistics over records `start..=end`, which must begin right after a
/// congestion event and end on one.
pub fn cycle_stats(trace: &Trace, start: usize, end: usize) -> Result<CycleStats> {
    if start > end || end >= trace.records.len() {
        return Err(Error::NoCompleteCycle);
    }
    let rows = &trace.records[start..=end];
    let n = trace.n_flows();
    let event_rows: Vec<&RoundRecord> = rows.iter().filter(|r| r.congestion).collect();
    if event_rows.is_empty() {
        return Err(Error::NoCompleteCycle);
    }
    let events = event_rows.len();
    let mut peak = vec![0.0; n];
    for r in &event_rows {
        for (p, w) in peak.iter_mut().zip(&r.cwnd) {
            *p += w / events as f64;
        }
    }
    let mut packets = vec![0.0; n];
    let mut duration = 0.0;
    for r in rows {
        for (p, w) in packets.iter_mut().zip(&r.cwnd) {
            *p += w;
        }
        duration += r.rtt;
    }
    let fair = trace.fair_share_pkts();
    Ok(CycleStats {
        rounds_per_cycle: (rows.len() - events) as f64 / events as f64,
        span_rounds: rows.len(),
        events,
        peak_window: peak,
        normalized_rate: packets.iter().map(|p| p / duration / fair).collect(),
        packets_per_cycle: packets,
        cycle_duration: duration,
    })
}

/// The converged sawtooth cycle of a deterministic run, or, failing that,
/// the cycle between the last two congestion events.
pub fn detect_cycle(trace: &Trace) -> Result<CycleStats> {
    if let Some(c) = trace.converged_cycle() {
        return cycle_stats(trace, c.start, c.end);
    }
    match trace.events.as_slice() {
        [.., prev, last] => cycle_stats(trace, prev + 1, *last),
        _ => Err(Error::NoCompleteCycle),
    }
}

/// One [`CycleStats`] per pair of consecutive congestion events after the
/// run settled (stochastic modes).
pub fn cycle_samples(trace: &Trace) -> Result<Vec<CycleStats>> {
    let from = match trace.outcome {
        Outcome::Settled { round, .. } => round,
        Outcome::NotConverged => return Err(Error::NoCompleteCycle),
    };
    let ev: Vec<usize> = trace.events.iter().copied().filter(|&e| e >= from).collect();
    if ev.len() < 2 {
        return Err(Error::NoCompleteCycle);
    }
    ev.windows(2).map(|w| cycle_stats(trace, w[0] + 1, w[1])).collect()
}

/// Packets each flow delivers in `[from, to)`, spreading each round's
/// window evenly over its duration.
pub fn delivered_between(trace: &Trace, from: f64, to: f64) -> Vec<f64> {
    let mut out = vec![0.0; trace.n_flows()];
    for r in &trace.records {
        let (s, e) = (r.t_start, r.t_start + r.rtt);
        if e <= from {
            continue;
        }
        if s >= to {
            break;
        }
        let overlap = e.min(to) - s.max(from);
        if overlap > 0.0 {
            for (o, rate) in out.iter_mut().zip(&r.rate) {
                *o += rate * overlap;
            }
        }
    }
    out
}

/// Per-flow throughput over `count` consecutive intervals of `interval`
/// seconds starting at `from`, divided by the fair share `C / N`.
/// Returns `samples[flow][k]`.
pub fn normalized_rates(trace: &Trace, from: f64, interval: f64, count: usize) -> Result<Vec<Vec<f64>>> {
    let needed = from + interval * count as f64;
    if trace.end_time() < needed {
        return Err(Error::TraceTooShort {
            needed,
            have: trace.end_time(),
        });
    }
    let n = trace.n_flows();
    let norm = interval * trace.fair_share_pkts();
    let mut bins = vec![vec![0.0; count]; n];
    let first = trace
        .records
        .partition_point(|r| r.t_start + r.rtt <= from);
    for r in &trace.records[first..] {
        let (s, e) = (r.t_start, r.t_start + r.rtt);
        if s >= needed {
            break;
        }
        let (lo, hi) = (s.max(from), e.min(needed));
        if hi <= lo {
            continue;
        }
        // start one bin early in case rounding put `lo` just past a boundary
        let first_bin = (((lo - from) / interval).floor().max(0.0) as usize)
            .min(count - 1)
            .saturating_sub(1);
        for k in first_bin..count {
            let b0 = from + k as f64 * interval;
            if b0 >= hi {
                break;
            }
            let b1 = if k + 1 == count { needed } else { from + (k + 1) as f64 * interval };
            let dt = hi.min(b1) - lo.max(b0);
            if dt > 0.0 {
                for (flow, rate) in r.rate.iter().enumerate() {
                    bins[flow][k] += rate * dt;
                }
            }
        }
    }
    for flow in &mut bins {
        for v in flow.iter_mut() {
            *v /= norm;
        }
    }
    Ok(bins)
}

#[derive(Serialize)]
struct TraceRow<'a> {
    round: u64,
    t_start_s: f64,
    flow_id: usize,
    cca: &'a str,
    cwnd_pkts: f64,
    queue_pkts: f64,
    rtt_s: f64,
    rate_pps: f64,
    reduced: u8,
}

/// One CSV row per flow per round.
pub fn write_trace_csv<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &trace.records {
        for i in 0..trace.n_flows() {
            w.serialize(TraceRow {
                round: r.round,
                t_start_s: r.t_start,
                flow_id: i,
                cca: trace.kinds[i].label(),
                cwnd_pkts: r.cwnd[i],
                queue_pkts: r.queue,
                rtt_s: r.rtt,
                rate_pps: r.rate[i],
                reduced: u8::from(r.reduced[i]),
            })?;
        }
    }
    w.flush().map_err(|e| Error::io("<trace csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bottleneck::{LossesPerEvent, SyncMode};
    use crate::model::{validate_scenario, AimdParams, BufferPolicy, FlowGroup};

    const SYNC: BottleneckConfig = BottleneckConfig::TailDrop(SyncMode::AllFlowsReduce);

    fn scenario(buffer: BufferPolicy, groups: Vec<FlowGroup>) -> Scenario {
        validate_scenario(LinkConfig::mbps_ms(40.0, 10.0, buffer), groups).unwrap()
    }

    fn reno_vs_creno(buffer: BufferPolicy) -> Scenario {
        scenario(buffer, vec![FlowGroup::reno(1), FlowGroup::creno(0.7, 1).unwrap()])
    }

    fn flow(params: AimdParams, cwnd: f64) -> FlowState {
        FlowState {
            kind: CcaKind::Tagged("t".into()),
            params,
            cwnd,
            pending_reduction: false,
        }
    }

    #[test]
    fn step_grows_without_loss() {
        let link = LinkConfig::mbps_ms(40.0, 10.0, BufferPolicy::SizedByPackets(1000.0));
        let mut flows = vec![flow(AimdParams::RENO, 10.0)];
        let mut b = Bottleneck::new(SYNC, 1000.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = step_round(&mut flows, &mut b, &link, 0, 0.0, &mut rng);
        assert_eq!(r.cwnd, vec![11.0]);
        assert!(!r.reduced[0]);
    }

    #[test]
    fn step_reduces_when_flagged() {
        let link = LinkConfig::mbps_ms(40.0, 10.0, BufferPolicy::SizedByPackets(1000.0));
        let mut f = flow(AimdParams::new(9.0 / 17.0, 0.7).unwrap(), 17.0);
        f.pending_reduction = true;
        let mut flows = vec![f];
        let mut b = Bottleneck::new(SYNC, 1000.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = step_round(&mut flows, &mut b, &link, 0, 0.0, &mut rng);
        assert!((r.cwnd[0] - 11.9).abs() < 1e-12);
        assert!(r.reduced[0]);
        assert!(!flows[0].pending_reduction);
    }

    #[test]
    fn overflow_flags_both_flows() {
        let s = reno_vs_creno(BufferPolicy::SizedByPackets(50.0));
        let link = *s.link();
        let t = s.overflow_pkts();
        let mut flows = vec![
            flow(AimdParams::RENO, t / 2.0),
            flow(AimdParams::reno_friendly(0.7).unwrap(), t / 2.0 - 1.0),
        ];
        let mut b = Bottleneck::new(SYNC, s.buffer_pkts());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // total after growth: t + 9/17 > BDP + B
        let r = step_round(&mut flows, &mut b, &link, 0, 0.0, &mut rng);
        assert!(r.congestion);
        assert!(flows.iter().all(|f| f.pending_reduction));
        let r2 = step_round(&mut flows, &mut b, &link, 1, r.rtt, &mut rng);
        assert_eq!(r2.reduced, vec![true, true]);
    }

    #[test]
    fn single_reno_sawtooth() {
        // BDP + B = 113.3, so integer windows peak at 114 and halve cleanly
        let s = scenario(BufferPolicy::SizedByPackets(80.0), vec![FlowGroup::reno(1)]);
        let overflow = s.overflow_pkts();
        let trace = run(&SimConfig::new(s, SYNC)).unwrap();
        let c = detect_cycle(&trace).unwrap();
        assert_eq!(c.events, 1);
        let peak = c.peak_window[0];
        // first integer-step window past BDP + B
        assert!(peak > overflow && peak <= overflow + 1.0);
        assert_eq!(c.rounds_per_cycle, (peak * 0.5_f64).ceil());
        assert!((c.rounds_per_cycle - peak * 0.5).abs() < 1e-9);
    }

    #[test]
    fn twenty_peak_has_ten_increase_rounds() {
        // BDP + B chosen so that a Reno flow peaks at exactly 20
        let link = LinkConfig::new(12e6, 1500, 0.01, BufferPolicy::SizedByPackets(9.5));
        let s = validate_scenario(link, vec![FlowGroup::reno(1)]).unwrap();
        let cfg = SimConfig::new(s, SYNC).with_initial(InitialWindows::Uniform(10.0));
        let c = detect_cycle(&run(&cfg).unwrap()).unwrap();
        assert_eq!(c.peak_window, vec![20.0]);
        assert_eq!(c.rounds_per_cycle, 10.0);
        assert_eq!(c.span_rounds, 11);
    }

    #[test]
    fn tuned_buffer_packets_per_cycle_equal() {
        let s = reno_vs_creno(BufferPolicy::SizedByTime(0.025));
        let trace = run(&SimConfig::new(s, SYNC)).unwrap();
        let c = detect_cycle(&trace).unwrap();
        let rel = (c.packets_per_cycle[1] - c.packets_per_cycle[0]).abs() / c.packets_per_cycle[0];
        assert!(rel < 1e-6, "rel {rel}");
        let ratio = c.peak_window[1] / c.peak_window[0];
        assert!((ratio - 15.0 / 17.0).abs() < 1e-6);
    }

    #[test]
    fn steady_state_identity() {
        let s = reno_vs_creno(BufferPolicy::SizedByTime(0.2));
        let trace = run(&SimConfig::new(s.clone(), SYNC)).unwrap();
        let c = detect_cycle(&trace).unwrap();
        for (f, peak) in s.flows().iter().zip(&c.peak_window) {
            let lhs = f.params.a() * c.rounds_per_cycle;
            let rhs = peak * (1.0 - f.params.b());
            assert!((lhs - rhs).abs() <= f.params.a() * 1e-6, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn creno_rate_falls_while_window_rises() {
        let s = reno_vs_creno(BufferPolicy::SizedByTime(0.2));
        let trace = run(&SimConfig::new(s, SYNC)).unwrap();
        let cyc = trace.converged_cycle().unwrap();
        let rows = &trace.records[cyc.start..=cyc.end];
        for w in rows.windows(2) {
            if w[1].reduced[1] {
                continue;
            }
            assert!(w[1].cwnd[1] > w[0].cwnd[1]);
            assert!(w[1].rate[1] <= w[0].rate[1]);
        }
    }

    #[test]
    fn event_fires_on_first_overflow() {
        let s = reno_vs_creno(BufferPolicy::SizedByTime(0.025));
        let limit = s.overflow_pkts();
        let growth = 1.0 + 9.0 / 17.0;
        let trace = run(&SimConfig::new(s, SYNC).with_measure_time(5.0)).unwrap();
        for (i, r) in trace.records.iter().enumerate() {
            let total = r.total_cwnd();
            if r.congestion {
                assert!(total > limit);
                if i > 0 && !r.reduced.iter().any(|&x| x) {
                    assert!(trace.records[i - 1].total_cwnd() <= limit);
                    assert!(total <= limit + growth + 1e-9);
                }
            } else {
                assert!(total <= limit);
            }
        }
    }

    #[test]
    fn conservation_and_floors() {
        let s = reno_vs_creno(BufferPolicy::SizedByTime(0.011));
        let cap = s.capacity_pkts();
        let base = s.link().base_rtt;
        for cfg in [
            SimConfig::new(s.clone(), SYNC),
            SimConfig::new(s.clone(), BottleneckConfig::TailDrop(SyncMode::ProbabilisticHits(LossesPerEvent::Fixed(2)))),
            SimConfig::new(s.clone(), BottleneckConfig::Pie(Default::default())),
        ] {
            let trace = run(&cfg.with_measure_time(20.0)).unwrap();
            let mut t = -1.0;
            for r in &trace.records {
                let delivered: f64 = r.cwnd.iter().sum();
                let budget = cap * r.rtt;
                assert!(delivered <= budget * (1.0 + 1e-12));
                if r.queue > 0.0 {
                    assert!((delivered - budget).abs() <= 1e-9 * budget);
                    for (rate, w) in r.rate.iter().zip(&r.cwnd) {
                        assert!((rate * r.rtt - w).abs() <= 1e-9 * w);
                    }
                }
                assert!(r.queue >= 0.0 && r.rtt >= base && r.rtt > 0.0);
                assert!(r.t_start > t);
                t = r.t_start;
            }
        }
    }

    #[test]
    fn deterministic_and_initial_condition_free() {
        let s = reno_vs_creno(BufferPolicy::SizedByTime(0.2));
        let base = detect_cycle(&run(&SimConfig::new(s.clone(), SYNC)).unwrap()).unwrap();
        for seed in 0..5 {
            let cfg = SimConfig::new(s.clone(), SYNC)
                .with_seed(seed)
                .with_initial(InitialWindows::Random { max: 400.0 });
            let c = detect_cycle(&run(&cfg).unwrap()).unwrap();
            for (x, y) in c.peak_window.iter().zip(&base.peak_window) {
                assert!((x - y).abs() < 1e-6 * y);
            }
        }
    }

    #[test]
    fn seeded_runs_repeat_bit_for_bit() {
        let s = reno_vs_creno(BufferPolicy::SizedByTime(0.025));
        let cfg = SimConfig::new(s, BottleneckConfig::Pie(Default::default()))
            .with_seed(42)
            .with_measure_time(10.0);
        let (a, b) = (run(&cfg).unwrap(), run(&cfg).unwrap());
        let mut ca = Vec::new();
        let mut cb = Vec::new();
        write_trace_csv(&a, &mut ca).unwrap();
        write_trace_csv(&b, &mut cb).unwrap();
        assert_eq!(ca, cb);
        let other = run(&cfg.clone().with_seed(43)).unwrap();
        let mut co = Vec::new();
        write_trace_csv(&other, &mut co).unwrap();
        assert_ne!(ca, co);
    }

    #[test]
    fn not_converging_is_an_outcome() {
        let s = reno_vs_creno(BufferPolicy::SizedByTime(0.2));
        let mut cfg = SimConfig::new(s, SYNC);
        cfg.max_rounds = 50;
        let trace = run(&cfg).unwrap();
        assert_eq!(trace.outcome, Outcome::NotConverged);
        assert_eq!(trace.records.len(), 50);
        assert!(matches!(cycle_samples(&trace), Err(Error::NoCompleteCycle)));
    }

    #[test]
    fn normalized_rates_sum_to_utilization() {
        let s = scenario(
            BufferPolicy::SizedByTime(0.2),
            vec![FlowGroup::reno(3)],
        );
        let trace = run(&SimConfig::new(s, SYNC).with_measure_time(30.0)).unwrap();
        let from = trace.settled_time().unwrap();
        let samples = normalized_rates(&trace, from, 1.0, 25).unwrap();
        for k in 0..25 {
            let sum: f64 = samples.iter().map(|f| f[k]).sum();
            // deep buffer: the link never idles
            assert!((sum - 3.0).abs() < 1e-9, "{sum}");
            for f in &samples {
                assert!((f[k] - 1.0).abs() < 1e-9);
            }
        }
        assert!(matches!(
            normalized_rates(&trace, from, 1.0, 1000),
            Err(Error::TraceTooShort { .. })
        ));
    }

    #[test]
    fn delivered_matches_window_sums() {
        let s = reno_vs_creno(BufferPolicy::SizedByTime(0.025));
        let trace = run(&SimConfig::new(s, SYNC).with_measure_time(3.0)).unwrap();
        let all = delivered_between(&trace, 0.0, trace.end_time());
        for (x, y) in all.iter().zip(&trace.cumulative_packets) {
            assert!((x - y).abs() < 1e-6 * y);
        }
    }

    #[test]
    fn trace_csv_shape() {
        let s = reno_vs_creno(BufferPolicy::SizedByTime(0.025));
        let mut cfg = SimConfig::new(s, SYNC);
        cfg.max_rounds = 3;
        let trace = run(&cfg).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "round,t_start_s,flow_id,cca,cwnd_pkts,queue_pkts,rtt_s,rate_pps,reduced"
        );
        assert_eq!(lines.count(), 6);
        assert!(text.contains(",creno,"));
    }

    #[test]
    fn stochastic_cycle_samples() {
        let s = reno_vs_creno(BufferPolicy::SizedByTime(0.025));
        let cfg = SimConfig::new(
            s,
            BottleneckConfig::TailDrop(SyncMode::ProbabilisticHits(LossesPerEvent::Fixed(2))),
        )
        .with_seed(5)
        .with_measure_time(30.0);
        let samples = cycle_samples(&run(&cfg).unwrap()).unwrap();
        assert!(samples.len() > 10);
        assert!(samples.iter().all(|c| c.events == 1 && c.cycle_duration > 0.0));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn binning_loses_nothing(from in 0.0f64..3.0, interval in 0.013f64..0.7, count in 1usize..40) {
            let s = reno_vs_creno(BufferPolicy::SizedByTime(0.011));
            let cfg = SimConfig::new(s, SYNC).with_measure_time(35.0);
            let trace = run(&cfg).unwrap();
            let bins = normalized_rates(&trace, from, interval, count).unwrap();
            let total = delivered_between(&trace, from, from + interval * count as f64);
            let norm = interval * trace.fair_share_pkts();
            for (f, t) in bins.iter().zip(&total) {
                let sum: f64 = f.iter().sum::<f64>() * norm;
                proptest::prop_assert!((sum - t).abs() <= 1e-9 * t.max(1.0));
            }
        }
    }
}
