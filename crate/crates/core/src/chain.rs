//! Long-run rates under probabilistic loss assignment.
//!
//! [`build_chain`] turns the tail-drop dynamics into a Markov chain whose
//! states are the windows at successive buffer overflows, quantized to a
//! grid. [`stationary`] solves it and applies renewal-reward.
//! [`monte_carlo`] runs the stochastic simulator over many seeds instead.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::fmt;
use std::io::Write;

use petgraph::algo::kosaraju_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::bottleneck::{queue_and_rtt, BottleneckConfig, SyncMode};
use crate::error::{Error, Result};
use crate::friendliness::{hit_set_probs, hit_set_probs_f64, single_loss_hit_probs};
use crate::model::Scenario;
use crate::ratio::Ratio;
use crate::sim::{self, SimConfig};

pub const MAX_CHAIN_FLOWS: usize = 4;

/// Windows at an overflow round, in units of the quantum, plus the flows
/// that reduced in that same round (they cannot reduce again yet).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChainState {
    pub windows: Vec<i64>,
    pub just_reduced: u32,
}

impl ChainState {
    pub fn windows_pkts(&self, quantum: f64) -> Vec<f64> {
        self.windows.iter().map(|&k| k as f64 * quantum).collect()
    }

    /// `w0;w1;...|mask`, windows in packets, mask with flow 0 first.
    pub fn label(&self, quantum: f64) -> String {
        let w: Vec<String> = self
            .windows_pkts(quantum)
            .iter()
            .map(|w| format!("{w}"))
            .collect();
        let mask: String = (0..self.windows.len())
            .map(|i| if self.just_reduced & (1 << i) != 0 { '1' } else { '0' })
            .collect();
        format!("{}|{}", w.join(";"), mask)
    }
}

#[derive(Clone, Debug)]
pub struct Transition {
    pub to: usize,
    pub prob: f64,
    /// Set when the chain was built with exact probabilities.
    pub prob_exact: Option<Ratio>,
    /// Packets each flow delivers from the round after this overflow up
    /// to and including the next one.
    pub packets: Vec<f64>,
    pub time: f64,
}

#[derive(Clone, Debug)]
pub struct ChainOptions {
    /// Grid spacing for event-state windows, in packets.
    pub quantum: f64,
    pub max_states: usize,
    /// Compute hit probabilities in exact rational arithmetic.
    pub exact: bool,
    /// Hit outcomes less likely than this are dropped and the rest
    /// renormalized. Without it the search follows arbitrarily unlikely
    /// runs of persistent overflow.
    pub min_prob: f64,
    /// Windows the flows start from; the first overflow reached from
    /// here seeds the state search.
    pub initial: Option<Vec<f64>>,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            quantum: 1.0,
            max_states: 1_000_000,
            exact: false,
            min_prob: 1e-12,
            initial: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Chain {
    pub quantum: f64,
    pub n_flows: usize,
    /// Fair share `C / N` in packets per second.
    pub fair_share_pps: f64,
    pub states: Vec<ChainState>,
    pub transitions: Vec<Vec<Transition>>,
    /// Largest probability mass pruned from any one state.
    pub pruned_mass: f64,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Deterministic evolution between overflows.
struct Dynamics {
    a: Vec<f64>,
    b: Vec<f64>,
    limit: f64,
    link: crate::model::LinkConfig,
    sync: SyncMode,
    buffer: f64,
    growth: f64,
}

struct Step {
    windows: Vec<f64>,
    just_reduced: u32,
    packets: Vec<f64>,
    time: f64,
}

impl Dynamics {
    const MAX_ROUNDS: usize = 10_000_000;

    /// Applies `reduce` (a bit mask), then grows every flow until the
    /// aggregate window first exceeds BDP + B.
    fn advance(&self, start: &[f64], reduce: u32) -> Result<Step> {
        let n = start.len();
        let mut w = start.to_vec();
        let mut packets = vec![0.0; n];
        let mut time = 0.0;
        let mut mask = reduce;
        for _ in 0..Self::MAX_ROUNDS {
            for i in 0..n {
                if mask & (1 << i) != 0 {
                    w[i] *= self.b[i];
                } else {
                    w[i] += self.a[i];
                }
            }
            let total: f64 = w.iter().sum();
            for (p, x) in packets.iter_mut().zip(&w) {
                *p += x;
            }
            time += queue_and_rtt(total, &self.link).rtt;
            if total > self.limit {
                return Ok(Step {
                    windows: w,
                    just_reduced: mask,
                    packets,
                    time,
                });
            }
            mask = 0;
        }
        Err(Error::NoNextEvent(start.to_vec()))
    }
}

/// Enumerates the overflow states reachable from the first overflow and
/// the transitions between them.
pub fn build_chain(scenario: &Scenario, bottleneck: BottleneckConfig, opts: &ChainOptions) -> Result<Chain> {
    let sync = match bottleneck {
        BottleneckConfig::TailDrop(s) => s,
        BottleneckConfig::Pie(_) => return Err(Error::ChainNeedsTailDrop),
    };
    let n = scenario.n_flows();
    if n == 0 || n > MAX_CHAIN_FLOWS {
        return Err(Error::ChainFlowCount(n));
    }
    if !(opts.quantum > 0.0 && opts.quantum.is_finite()) {
        return Err(Error::Config(format!("quantum must be positive (got {})", opts.quantum)));
    }
    let dyn_ = Dynamics {
        a: scenario.flows().iter().map(|f| f.params.a()).collect(),
        b: scenario.flows().iter().map(|f| f.params.b()).collect(),
        limit: scenario.overflow_pkts(),
        link: *scenario.link(),
        sync,
        buffer: scenario.buffer_pkts(),
        growth: scenario.flows().iter().map(|f| f.params.a()).sum(),
    };
    let q = opts.quantum;
    let quantize = |w: &[f64], mask: u32| ChainState {
        windows: w.iter().map(|x| (x / q).round() as i64).collect(),
        just_reduced: mask,
    };

    let start = opts.initial.clone().unwrap_or_else(|| vec![1.0; n]);
    if start.len() != n {
        return Err(Error::Config("initial windows: one value per flow".into()));
    }
    // the starting windows themselves may already overflow
    let first = if start.iter().sum::<f64>() > dyn_.limit {
        quantize(&start, 0)
    } else {
        let s = dyn_.advance(&start, 0)?;
        quantize(&s.windows, 0)
    };

    let mut index: HashMap<ChainState, usize> = HashMap::new();
    let mut states = vec![first.clone()];
    let mut transitions: Vec<Vec<Transition>> = vec![Vec::new()];
    index.insert(first, 0);
    let mut queue = VecDeque::from([0usize]);
    let mut pruned_mass: f64 = 0.0;

    while let Some(id) = queue.pop_front() {
        let state = states[id].clone();
        let w = state.windows_pkts(q);
        let eligible = !state.just_reduced & ((1u32 << n) - 1);
        let mut out: Vec<Transition> = Vec::new();
        let (outcomes, pruned) = prune(hit_outcomes(&dyn_, &state, &w, opts.exact)?, opts.min_prob);
        pruned_mass = pruned_mass.max(pruned);
        for (hit, prob, exact) in outcomes {
            let step = dyn_.advance(&w, hit & eligible)?;
            let next = quantize(&step.windows, step.just_reduced);
            let to = match index.get(&next) {
                Some(&j) => j,
                None => {
                    if states.len() >= opts.max_states {
                        return Err(Error::StateSpaceOverflow { cap: opts.max_states });
                    }
                    let j = states.len();
                    index.insert(next.clone(), j);
                    states.push(next);
                    transitions.push(Vec::new());
                    queue.push_back(j);
                    j
                }
            };
            // outcomes that differ only in wasted hits lead to the same place
            match out.iter_mut().find(|t| t.to == to && t.packets == step.packets) {
                Some(t) => {
                    t.prob += prob;
                    t.prob_exact = match (t.prob_exact.take(), exact) {
                        (Some(x), Some(y)) => Some(&x + &y),
                        _ => None,
                    };
                }
                None => out.push(Transition {
                    to,
                    prob,
                    prob_exact: exact,
                    packets: step.packets,
                    time: step.time,
                }),
            }
        }
        transitions[id] = out;
    }

    Ok(Chain {
        quantum: q,
        n_flows: n,
        fair_share_pps: scenario.fair_share_pkts(),
        states,
        transitions,
        pruned_mass,
    })
}

type Outcome = (u32, f64, Option<Ratio>);

/// Drops outcomes below `min_prob` and rescales the rest to sum to one.
fn prune(outcomes: Vec<Outcome>, min_prob: f64) -> (Vec<Outcome>, f64) {
    let before = outcomes.len();
    let kept: Vec<Outcome> = outcomes.into_iter().filter(|o| o.1 >= min_prob).collect();
    if kept.len() == before || kept.is_empty() {
        return (kept, 0.0);
    }
    let total: f64 = kept.iter().map(|o| o.1).sum();
    let exact_total: Option<Ratio> = kept.iter().map(|o| o.2.clone()).sum::<Option<Ratio>>();
    let out = kept
        .into_iter()
        .map(|(m, p, e)| (m, p / total, e.zip(exact_total.as_ref()).map(|(e, t)| &e / t)))
        .collect();
    (out, 1.0 - total)
}

/// `(hit mask, probability, exact probability)` for every hit set.
fn hit_outcomes(
    dyn_: &Dynamics,
    state: &ChainState,
    w: &[f64],
    exact: bool,
) -> Result<Vec<Outcome>> {
    let n = w.len();
    let all = (1u32 << n) - 1;
    let losses = match dyn_.sync {
        SyncMode::AllFlowsReduce => return Ok(vec![(all, 1.0, exact.then(Ratio::one))]),
        SyncMode::ProbabilisticHits(policy) => {
            let total: f64 = w.iter().sum();
            let overshoot = queue_and_rtt(total, &dyn_.link).queue - dyn_.buffer;
            policy.resolve(overshoot, dyn_.growth)
        }
    };
    // every flow shares the round's RTT, so rates are proportional to windows
    if exact {
        let weights: Vec<Ratio> = state.windows.iter().map(|&k| Ratio::from_integer(k)).collect();
        let dist = hit_set_probs(&single_loss_hit_probs(&weights)?, losses)?;
        Ok(dist
            .iter()
            .map(|(set, p)| {
                let mask = set.iter().fold(0u32, |m, &i| m | (1 << i));
                (mask, p.to_f64(), Some(p.clone()))
            })
            .collect())
    } else {
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
        Ok(hit_set_probs_f64(&probs, losses)?
            .into_iter()
            .filter(|&(_, p)| p > 0.0)
            .map(|(m, p)| (m, p, None))
            .collect())
    }
}

#[derive(Clone, Debug)]
pub struct StationaryOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions {
            tolerance: 1e-12,
            max_iterations: 1_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StationaryResult {
    /// State ids of the recurrent class that was solved.
    pub class: Vec<usize>,
    /// Probability of each state in `class`.
    pub probabilities: Vec<f64>,
    /// Number of closed classes found; more than one means the chain was
    /// reducible and only the largest was used.
    pub closed_classes: usize,
    /// Long-run throughput per flow, packets per second.
    pub rates_pps: Vec<f64>,
    pub ratio_to_fair: Vec<f64>,
    /// L1 norm of `pi P - pi` at exit.
    pub residual: f64,
    pub iterations: usize,
}

/// Stationary distribution of the largest closed class by lazy power
/// iteration, then renewal-reward rates.
pub fn stationary(chain: &Chain, opts: &StationaryOptions) -> Result<StationaryResult> {
    if chain.is_empty() {
        return Err(Error::NoCompleteCycle);
    }
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(chain.len(), 0);
    let nodes: Vec<NodeIndex> = (0..chain.len()).map(|_| g.add_node(())).collect();
    for (i, ts) in chain.transitions.iter().enumerate() {
        for t in ts {
            g.add_edge(nodes[i], nodes[t.to], ());
        }
    }
    let sccs = kosaraju_scc(&g);
    let mut comp = vec![0usize; chain.len()];
    for (c, members) in sccs.iter().enumerate() {
        for v in members {
            comp[v.index()] = c;
        }
    }
    let closed: Vec<&Vec<NodeIndex>> = sccs
        .iter()
        .enumerate()
        .filter(|(c, members)| {
            members
                .iter()
                .all(|v| chain.transitions[v.index()].iter().all(|t| comp[t.to] == *c))
        })
        .map(|(_, m)| m)
        .collect();
    let best = closed
        .iter()
        .max_by_key(|m| (m.len(), std::cmp::Reverse(m.iter().map(|v| v.index()).min())))
        .ok_or(Error::NoCompleteCycle)?;
    let mut class: Vec<usize> = best.iter().map(|v| v.index()).collect();
    class.sort_unstable();
    let local: HashMap<usize, usize> = class.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let m = class.len();
    let mut pi = vec![1.0 / m as f64; m];
    let mut next = vec![0.0; m];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (i, &s) in class.iter().enumerate() {
            for t in &chain.transitions[s] {
                next[local[&t.to]] += pi[i] * t.prob;
            }
        }
        residual = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        iterations += 1;
        // lazy step (I + P) / 2 breaks periodicity
        for (p, x) in pi.iter_mut().zip(&next) {
            *p = 0.5 * (*p + x);
        }
        let norm: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= norm);
        if residual < opts.tolerance {
            break;
        }
    }
    if residual >= opts.tolerance {
        return Err(Error::StationaryNotConverged { iterations, residual });
    }

    let n = chain.n_flows;
    let mut packets = vec![0.0; n];
    let mut time = 0.0;
    for (i, &s) in class.iter().enumerate() {
        for t in &chain.transitions[s] {
            let w = pi[i] * t.prob;
            for (p, x) in packets.iter_mut().zip(&t.packets) {
                *p += w * x;
            }
            time += w * t.time;
        }
    }
    let rates_pps: Vec<f64> = packets.iter().map(|p| p / time).collect();
    Ok(StationaryResult {
        ratio_to_fair: rates_pps.iter().map(|r| r / chain.fair_share_pps).collect(),
        rates_pps,
        class,
        probabilities: pi,
        closed_classes: closed.len(),
        residual,
        iterations,
    })
}

/// `state,probability` rows for the solved class.
pub fn write_distribution_csv<W: Write>(chain: &Chain, result: &StationaryResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["state", "probability"])?;
    for (&s, p) in result.class.iter().zip(&result.probabilities) {
        w.write_record([chain.states[s].label(chain.quantum), format!("{p:e}")])?;
    }
    w.flush().map_err(|e| Error::io("<distribution csv>", e))?;
    Ok(())
}

/// `flow,long_run_rate,ratio_to_fair` rows.
pub fn write_rates_csv<W: Write>(result: &StationaryResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["flow", "long_run_rate", "ratio_to_fair"])?;
    for (i, (r, f)) in result.rates_pps.iter().zip(&result.ratio_to_fair).enumerate() {
        w.write_record([i.to_string(), r.to_string(), f.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<rates csv>", e))?;
    Ok(())
}

/// Sample mean with a two-sided 95% Student-t interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let n = xs.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                half_width: f64::INFINITY,
                n,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let half_width = if var == 0.0 {
            if n > 1 { 0.0 } else { f64::INFINITY }
        } else {
            let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
                .expect("n > 1")
                .inverse_cdf(0.975);
            t * (var / n as f64).sqrt()
        };
        Estimate { mean, half_width, n }
    }

    pub fn lo(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.lo() <= other.hi() && other.lo() <= self.hi()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo() <= x && x <= self.hi()
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} ± {:.4}", self.mean, self.half_width)
    }
}

#[derive(Clone, Debug)]
pub struct McConfig {
    pub seeds: Vec<u64>,
    /// Seconds discarded after the run settles.
    pub warmup: f64,
    pub interval: f64,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    /// `samples[flow][k]`, normalized to the fair share.
    pub samples: Vec<Vec<f64>>,
    pub flow_means: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct MonteCarloResult {
    pub per_flow: Vec<Estimate>,
    /// Mean normalized rate of each flow group.
    pub per_group: Vec<Estimate>,
    /// Group 1 over group 0, when there are exactly two groups.
    pub group_ratio: Option<Estimate>,
    pub runs: Vec<SeedRun>,
}

/// Runs `base` once per seed in parallel and summarizes the per-seed mean
/// normalized rates.
pub fn monte_carlo(base: &SimConfig, mc: &McConfig) -> Result<MonteCarloResult> {
    if mc.seeds.is_empty() || mc.samples == 0 || !(mc.interval > 0.0) || !(mc.warmup >= 0.0) {
        return Err(Error::Config("monte carlo needs seeds, samples and a positive interval".into()));
    }
    let span = mc.warmup + mc.interval * mc.samples as f64;
    let runs: Vec<SeedRun> = mc
        .seeds
        .par_iter()
        .map(|&seed| {
            let cfg = base.clone().with_seed(seed).with_measure_time(span);
            let trace = sim::run(&cfg)?;
            let settled = trace
                .settled_time()
                .ok_or(Error::NoConvergence(cfg.max_rounds))?;
            let samples = sim::normalized_rates(&trace, settled + mc.warmup, mc.interval, mc.samples)?;
            let flow_means = samples
                .iter()
                .map(|s| s.iter().sum::<f64>() / s.len() as f64)
                .collect();
            Ok(SeedRun {
                seed,
                samples,
                flow_means,
            })
        })
        .collect::<Result<_>>()?;

    let scenario = &base.scenario;
    let n = scenario.n_flows();
    let per_flow = (0..n)
        .map(|i| Estimate::from_samples(&runs.iter().map(|r| r.flow_means[i]).collect::<Vec<_>>()))
        .collect();
    let group_mean = |r: &SeedRun, g: usize| {
        let members: Vec<usize> = scenario.group_members(g).collect();
        members.iter().map(|&i| r.flow_means[i]).sum::<f64>() / members.len() as f64
    };
    let groups = scenario.groups().len();
    let per_group = (0..groups)
        .map(|g| Estimate::from_samples(&runs.iter().map(|r| group_mean(r, g)).collect::<Vec<_>>()))
        .collect();
    let group_ratio = (groups == 2).then(|| {
        Estimate::from_samples(
            &runs
                .iter()
                .map(|r| group_mean(r, 1) / group_mean(r, 0))
                .collect::<Vec<_>>(),
        )
    });
    Ok(MonteCarloResult {
        per_flow,
        per_group,
        group_ratio,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bottleneck::LossesPerEvent;
    use crate::model::{validate_scenario, BufferPolicy, FlowGroup, LinkConfig};

    const SYNC: BottleneckConfig = BottleneckConfig::TailDrop(SyncMode::AllFlowsReduce);
    const HITS: BottleneckConfig =
        BottleneckConfig::TailDrop(SyncMode::ProbabilisticHits(LossesPerEvent::Fixed(2)));

    fn scenario(buffer_ms: f64, groups: Vec<FlowGroup>) -> Scenario {
        validate_scenario(
            LinkConfig::mbps_ms(40.0, 10.0, BufferPolicy::SizedByTime(buffer_ms / 1000.0)),
            groups,
        )
        .unwrap()
    }

    fn one_v_one(buffer_ms: f64) -> Scenario {
        scenario(buffer_ms, vec![FlowGroup::reno(1), FlowGroup::creno(0.7, 1).unwrap()])
    }

    #[test]
    fn outgoing_mass_sums_to_one() {
        let chain = build_chain(&one_v_one(25.0), HITS, &ChainOptions::default()).unwrap();
        for ts in &chain.transitions {
            let s: f64 = ts.iter().map(|t| t.prob).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_outgoing_mass_is_one() {
        let opts = ChainOptions {
            exact: true,
            ..Default::default()
        };
        let chain = build_chain(&one_v_one(10.0), HITS, &opts).unwrap();
        for ts in &chain.transitions {
            let s: Ratio = ts.iter().map(|t| t.prob_exact.clone().unwrap()).sum();
            assert_eq!(s, Ratio::one());
        }
    }

    #[test]
    fn transition_mass_at_17_15() {
        // windows 68:60 = 17:15 overflowing BDP + B = 127.3 by less than one
        // round of growth
        let s = validate_scenario(
            LinkConfig::mbps_ms(40.0, 10.0, BufferPolicy::SizedByPackets(94.0)),
            vec![FlowGroup::reno(1), FlowGroup::creno(0.7, 1).unwrap()],
        )
        .unwrap();
        let state = ChainState {
            windows: vec![68, 60],
            just_reduced: 0,
        };
        let dyn_ = Dynamics {
            a: vec![1.0, 9.0 / 17.0],
            b: vec![0.5, 0.7],
            limit: s.overflow_pkts(),
            link: *s.link(),
            sync: SyncMode::ProbabilisticHits(LossesPerEvent::Fixed(2)),
            buffer: s.buffer_pkts(),
            growth: 1.0 + 9.0 / 17.0,
        };
        let out = hit_outcomes(&dyn_, &state, &[68.0, 60.0], true).unwrap();
        let get = |m: u32| out.iter().find(|o| o.0 == m).unwrap().2.clone().unwrap();
        assert_eq!(get(0b01), Ratio::new(289, 1024));
        assert_eq!(get(0b11), Ratio::new(510, 1024));
        assert_eq!(get(0b10), Ratio::new(225, 1024));
    }

    #[test]
    fn degenerate_chain_matches_simulator() {
        let s = one_v_one(200.0);
        let opts = ChainOptions {
            quantum: 1e-9,
            ..Default::default()
        };
        let chain = build_chain(&s, SYNC, &opts).unwrap();
        let st = stationary(&chain, &StationaryOptions::default()).unwrap();
        let trace = sim::run(&SimConfig::new(s, SYNC)).unwrap();
        let cyc = sim::detect_cycle(&trace).unwrap();
        assert_eq!(st.closed_classes, 1);
        for (x, y) in st.ratio_to_fair.iter().zip(&cyc.normalized_rate) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn identical_flows_share_equally() {
        let s = scenario(25.0, vec![FlowGroup::reno(2)]);
        let chain = build_chain(&s, HITS, &ChainOptions::default()).unwrap();
        let st = stationary(&chain, &StationaryOptions::default()).unwrap();
        let (x, y) = (st.rates_pps[0], st.rates_pps[1]);
        assert!((x - y).abs() <= 1e-9 * x, "{x} vs {y}");
        let s: f64 = st.probabilities.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn states_concentrate_in_band() {
        // only persistent overflows leave the band, and they are rare
        let s = one_v_one(25.0);
        let chain = build_chain(&s, HITS, &ChainOptions::default()).unwrap();
        let st = stationary(&chain, &StationaryOptions::default()).unwrap();
        let limit = s.overflow_pkts();
        let slack = 2.0 * 0.5 * chain.quantum;
        let outside: f64 = st
            .class
            .iter()
            .zip(&st.probabilities)
            .filter(|(&id, _)| {
                let total: f64 = chain.states[id].windows_pkts(chain.quantum).iter().sum();
                !(total > limit - slack && total <= limit + 1.0 + 9.0 / 17.0 + slack)
            })
            .map(|(_, p)| p)
            .sum();
        assert!(outside < 0.01, "{outside}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = one_v_one(25.0);
        assert!(matches!(
            build_chain(&s, BottleneckConfig::Pie(Default::default()), &ChainOptions::default()),
            Err(Error::ChainNeedsTailDrop)
        ));
        let five = scenario(25.0, vec![FlowGroup::reno(5)]);
        assert!(matches!(
            build_chain(&five, HITS, &ChainOptions::default()),
            Err(Error::ChainFlowCount(5))
        ));
        let tiny = ChainOptions {
            max_states: 3,
            ..Default::default()
        };
        assert!(matches!(
            build_chain(&s, HITS, &tiny),
            Err(Error::StateSpaceOverflow { cap: 3 })
        ));
    }

    #[test]
    fn halving_quantum_keeps_ratio() {
        let s = one_v_one(25.0);
        let ratio = |q: f64| {
            let opts = ChainOptions {
                quantum: q,
                ..Default::default()
            };
            let st = stationary(&build_chain(&s, HITS, &opts).unwrap(), &Default::default()).unwrap();
            st.rates_pps[1] / st.rates_pps[0]
        };
        let (coarse, fine) = (ratio(1.0), ratio(0.5));
        assert!((coarse - fine).abs() / fine < 0.01, "{coarse} vs {fine}");
        assert!(fine > 1.0 && fine <= 1.1);
    }

    #[test]
    fn estimate_intervals() {
        let e = Estimate::from_samples(&[1.0, 1.0, 1.0]);
        assert_eq!(e.half_width, 0.0);
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        // t(0.975, 3) = 3.182446
        assert!((e.half_width - 3.182446 * (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-5);
        assert!(e.contains(2.5) && !e.contains(5.0));
    }

    #[test]
    fn sync_monte_carlo_has_zero_width() {
        let s = one_v_one(200.0);
        let mc = McConfig {
            seeds: (0..4).collect(),
            warmup: 0.0,
            interval: 1.0,
            samples: 5,
        };
        let r = monte_carlo(&SimConfig::new(s, SYNC), &mc).unwrap();
        for e in &r.per_flow {
            assert_eq!(e.half_width, 0.0);
        }
    }
}
