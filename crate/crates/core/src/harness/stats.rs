//! P1 / mean / P99 summaries of normalized flow rates.

use serde::{Deserialize, Serialize};

use crate::bottleneck::BottleneckConfig;
use crate::error::{Error, Result};
use crate::harness::config::ScenarioConfig;
use crate::model::Scenario;
use crate::sim::{self, Trace};

/// Nearest-rank percentile of sorted `xs`: the value at rank
/// `ceil(p / 100 * n)`, counting from 1.
pub fn percentile_nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: usize,
    pub label: String,
    pub cca: String,
    pub n_flows: usize,
    pub p1: f64,
    pub mean: f64,
    pub p99: f64,
    /// Samples per flow.
    pub samples: usize,
    /// `p1 <= mean <= p99`; a false value flags the row.
    pub ordered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub groups: Vec<GroupSummary>,
}

/// Pools the samples of every flow in each group.
pub fn summarize(scenario: &Scenario, labels: &[String], samples: &[Vec<f64>]) -> StatsSummary {
    let groups = scenario
        .groups()
        .iter()
        .enumerate()
        .filter(|(_, g)| g.count > 0)
        .map(|(gi, g)| {
            let mut pooled: Vec<f64> = scenario
                .group_members(gi)
                .flat_map(|i| samples[i].iter().copied())
                .collect();
            pooled.sort_by(f64::total_cmp);
            let mean = pooled.iter().sum::<f64>() / pooled.len() as f64;
            let p1 = percentile_nearest_rank(&pooled, 1.0);
            let p99 = percentile_nearest_rank(&pooled, 99.0);
            GroupSummary {
                group: gi,
                label: labels.get(gi).cloned().unwrap_or_default(),
                cca: g.kind.label().to_string(),
                n_flows: g.count,
                p1,
                mean,
                p99,
                samples: samples[scenario.group_members(gi).next().unwrap_or(0)].len(),
                ordered: p1 <= mean && mean <= p99,
            }
        })
        .collect();
    StatsSummary { groups }
}

/// Output of [`run_scenario`].
#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub scenario: Scenario,
    pub bottleneck: BottleneckConfig,
    pub trace: Trace,
    /// `samples[flow][k]`.
    pub samples: Vec<Vec<f64>>,
    /// Start of the first sample interval.
    pub measure_from: f64,
    pub summary: StatsSummary,
}

/// Simulates until settled, skips the warm-up, then samples each flow's
/// normalized rate `samples` times.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioRun> {
    let sim_cfg = config.sim_config()?;
    let trace = sim::run(&sim_cfg)?;
    let settled = trace
        .settled_time()
        .ok_or(Error::NoConvergence(sim_cfg.max_rounds))?;
    let m = &config.measurement;
    let measure_from = settled + m.warmup_s;
    let samples = sim::normalized_rates(&trace, measure_from, m.interval_s, m.samples)?;
    let summary = summarize(&sim_cfg.scenario, &config.group_labels(), &samples);
    Ok(ScenarioRun {
        scenario: sim_cfg.scenario,
        bottleneck: sim_cfg.bottleneck,
        trace,
        samples,
        measure_from,
        summary,
    })
}
