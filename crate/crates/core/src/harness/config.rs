//! TOML experiment descriptions.
//!
//! ```toml
//! seed = 1
//!
//! [link]
//! rate_mbps = 40
//! base_rtt_ms = 10
//! buffer_ms = 25          # or buffer_pkts = 83
//!
//! [bottleneck]
//! aqm = "taildrop"        # or "pie"
//! sync = "hits"           # "all" (default) or "hits"
//! losses_per_event = 2    # or "auto"
//!
//! [[flows]]
//! cca = "reno"
//!
//! [[flows]]
//! cca = "creno"
//! b = 0.7                 # a defaults to the Reno-friendly value
//!
//! [measurement]
//! interval_s = 1.0
//! samples = 250
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bottleneck::{BottleneckConfig, LossesPerEvent, PieParams, SyncMode};
use crate::chain::ChainOptions;
use crate::error::{Error, Result};
use crate::model::{validate_scenario, AimdParams, BufferPolicy, CcaKind, FlowGroup, LinkConfig, Scenario};
use crate::ratio::Ratio;
use crate::sim::{InitialWindows, SimConfig};

pub const DEFAULT_MSS: u32 = 1500;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub rate_mbps: f64,
    pub base_rtt_ms: f64,
    #[serde(default = "default_mss")]
    pub mss: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buffer_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buffer_pkts: Option<f64>,
}

fn default_mss() -> u32 {
    DEFAULT_MSS
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aqm {
    #[default]
    Taildrop,
    Pie,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyncChoice {
    #[default]
    All,
    Hits,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LossesSetting {
    Count(u32),
    Named(String),
}

impl Default for LossesSetting {
    fn default() -> Self {
        LossesSetting::Count(2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieSection {
    #[serde(default = "d_target_ms")]
    pub target_ms: f64,
    #[serde(default = "d_update_ms")]
    pub update_ms: f64,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default = "d_beta")]
    pub beta: f64,
}

fn d_target_ms() -> f64 {
    PieParams::default().target_delay * 1e3
}
fn d_update_ms() -> f64 {
    PieParams::default().update_interval * 1e3
}
fn d_alpha() -> f64 {
    PieParams::default().alpha
}
fn d_beta() -> f64 {
    PieParams::default().beta
}

impl Default for PieSection {
    fn default() -> Self {
        PieSection {
            target_ms: d_target_ms(),
            update_ms: d_update_ms(),
            alpha: d_alpha(),
            beta: d_beta(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BottleneckSection {
    #[serde(default)]
    pub aqm: Aqm,
    #[serde(default)]
    pub sync: SyncChoice,
    #[serde(default)]
    pub losses_per_event: LossesSetting,
    #[serde(default)]
    pub pie: PieSection,
}

impl BottleneckSection {
    pub fn build(&self) -> Result<BottleneckConfig> {
        match self.aqm {
            Aqm::Pie => {
                let p = &self.pie;
                if !(p.target_ms >= 0.0 && p.update_ms > 0.0 && p.alpha >= 0.0 && p.beta >= 0.0) {
                    return Err(Error::Config("pie: target >= 0, update > 0, gains >= 0".into()));
                }
                Ok(BottleneckConfig::Pie(PieParams {
                    target_delay: p.target_ms / 1e3,
                    update_interval: p.update_ms / 1e3,
                    alpha: p.alpha,
                    beta: p.beta,
                }))
            }
            Aqm::Taildrop => Ok(BottleneckConfig::TailDrop(match self.sync {
                SyncChoice::All => SyncMode::AllFlowsReduce,
                SyncChoice::Hits => SyncMode::ProbabilisticHits(match &self.losses_per_event {
                    LossesSetting::Count(0) => return Err(Error::ZeroLosses),
                    LossesSetting::Count(n) => LossesPerEvent::Fixed(*n),
                    LossesSetting::Named(s) if s == "auto" => LossesPerEvent::Auto,
                    LossesSetting::Named(s) => {
                        return Err(Error::Config(format!(
                            "losses_per_event: expected a count or \"auto\", got {s:?}"
                        )))
                    }
                }),
            })),
        }
    }
}

/// Additive increase: a number, an exact ratio such as `"9/17"`, or
/// `"reno-friendly"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IncreaseSetting {
    Value(f64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub cca: String,
    #[serde(default = "one")]
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<IncreaseSetting>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn one() -> usize {
    1
}

impl FlowSection {
    pub fn build(&self) -> Result<FlowGroup> {
        let kind = CcaKind::parse(&self.cca);
        let default_b = match kind {
            CcaKind::Reno => 0.5,
            _ => 0.7,
        };
        let b = self.b.unwrap_or(default_b);
        let a = match &self.a {
            None => None,
            Some(IncreaseSetting::Value(v)) => Some(*v),
            Some(IncreaseSetting::Text(t)) if t == "reno-friendly" => None,
            Some(IncreaseSetting::Text(t)) => Some(
                t.parse::<Ratio>()
                    .map_err(|e| Error::Config(format!("flow {:?}: a: {e}", self.cca)))?
                    .to_f64(),
            ),
        };
        let params = match (a, &kind) {
            (Some(a), _) => AimdParams::new(a, b)?,
            (None, CcaKind::Reno) => AimdParams::new(1.0, b)?,
            (None, _) => AimdParams::reno_friendly(b)?,
        };
        Ok(FlowGroup::new(kind, params, self.count))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    #[serde(default = "d_interval")]
    pub interval_s: f64,
    #[serde(default = "d_samples")]
    pub samples: usize,
    /// Seconds skipped once the run has settled.
    #[serde(default = "d_warmup")]
    pub warmup_s: f64,
}

fn d_interval() -> f64 {
    1.0
}
fn d_samples() -> usize {
    250
}
fn d_warmup() -> f64 {
    10.0
}

impl Default for MeasurementSection {
    fn default() -> Self {
        MeasurementSection {
            interval_s: d_interval(),
            samples: d_samples(),
            warmup_s: d_warmup(),
        }
    }
}

impl MeasurementSection {
    fn validate(&self) -> Result<()> {
        if !(self.interval_s > 0.0) {
            return Err(Error::Config("measurement interval must be > 0".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("measurement needs at least one sample".into()));
        }
        if !(self.warmup_s >= 0.0) {
            return Err(Error::Config("measurement warmup must be >= 0".into()));
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.warmup_s + self.interval_s * self.samples as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "d_max_rounds")]
    pub max_rounds: u64,
    #[serde(default = "d_epsilon")]
    pub epsilon: f64,
    #[serde(default = "d_max_period")]
    pub max_period: usize,
    #[serde(default = "d_warmup_events")]
    pub warmup_events: usize,
    /// Starting window of every flow, in packets.
    #[serde(default = "d_initial")]
    pub initial_cwnd: f64,
}

fn d_max_rounds() -> u64 {
    2_000_000
}
fn d_epsilon() -> f64 {
    1e-9
}
fn d_max_period() -> usize {
    64
}
fn d_warmup_events() -> usize {
    20
}
fn d_initial() -> f64 {
    1.0
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            max_rounds: d_max_rounds(),
            epsilon: d_epsilon(),
            max_period: d_max_period(),
            warmup_events: d_warmup_events(),
            initial_cwnd: d_initial(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    #[serde(default = "d_quantum")]
    pub quantum: f64,
    #[serde(default = "d_max_states")]
    pub max_states: usize,
    #[serde(default)]
    pub exact: bool,
    #[serde(default = "d_min_prob")]
    pub min_prob: f64,
}

fn d_quantum() -> f64 {
    1.0
}
fn d_max_states() -> usize {
    1_000_000
}
fn d_min_prob() -> f64 {
    1e-12
}

impl Default for ChainSection {
    fn default() -> Self {
        ChainSection {
            quantum: d_quantum(),
            max_states: d_max_states(),
            exact: false,
            min_prob: d_min_prob(),
        }
    }
}

impl ChainSection {
    pub fn options(&self) -> ChainOptions {
        ChainOptions {
            quantum: self.quantum,
            max_states: self.max_states,
            exact: self.exact,
            min_prob: self.min_prob,
            initial: None,
        }
    }
}

/// One experiment: a link, a bottleneck, flow groups and a measurement
/// protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    pub link: LinkSection,
    #[serde(default)]
    pub bottleneck: BottleneckSection,
    pub flows: Vec<FlowSection>,
    #[serde(default)]
    pub measurement: MeasurementSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub chain: ChainSection,
}

/// Buffer size for a time horizon: `C * horizon / 8` bytes, and that many
/// whole packets (at least one).
pub fn buffer_from_horizon(link: &LinkConfig, horizon: f64) -> Result<(f64, u64)> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::BadBufferHorizon(horizon));
    }
    let bytes = link.capacity_bps * horizon / 8.0;
    // tolerate float noise just below a whole packet
    let pkts = ((bytes / link.mss as f64) * (1.0 + 1e-12)).floor().max(1.0) as u64;
    Ok((bytes, pkts))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<ScenarioConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ScenarioConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn link(&self) -> Result<LinkConfig> {
        let l = &self.link;
        let probe = LinkConfig::new(l.rate_mbps * 1e6, l.mss, l.base_rtt_ms / 1e3, BufferPolicy::SizedByPackets(1.0));
        let buffer = match (l.buffer_ms, l.buffer_pkts) {
            (Some(ms), None) => BufferPolicy::SizedByPackets(buffer_from_horizon(&probe, ms / 1e3)?.1 as f64),
            (None, Some(p)) => BufferPolicy::SizedByPackets(p),
            _ => return Err(Error::Config("link: set exactly one of buffer_ms, buffer_pkts".into())),
        };
        Ok(LinkConfig { buffer, ..probe })
    }

    /// Buffer depth in milliseconds of link time.
    pub fn buffer_ms(&self) -> Result<f64> {
        Ok(self.link()?.buffer_seconds() * 1e3)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let groups = self.flows.iter().map(FlowSection::build).collect::<Result<Vec<_>>>()?;
        validate_scenario(self.link()?, groups)
    }

    pub fn bottleneck(&self) -> Result<BottleneckConfig> {
        self.bottleneck.build()
    }

    /// Group labels: the configured ones, else `A`, `B`, ...
    pub fn group_labels(&self) -> Vec<String> {
        self.flows
            .iter()
            .enumerate()
            .map(|(i, f)| f.label.clone().unwrap_or_else(|| group_letter(i)))
            .collect()
    }

    /// Simulator settings covering settling plus the measurement span.
    pub fn sim_config(&self) -> Result<SimConfig> {
        self.measurement.validate()?;
        let s = &self.sim;
        if !(s.initial_cwnd > 0.0) {
            return Err(Error::Config("sim.initial_cwnd must be > 0".into()));
        }
        let mut cfg = SimConfig::new(self.scenario()?, self.bottleneck()?)
            .with_seed(self.seed)
            .with_measure_time(self.measurement.span())
            .with_initial(InitialWindows::Uniform(s.initial_cwnd));
        cfg.max_rounds = s.max_rounds;
        cfg.convergence_epsilon = s.epsilon;
        cfg.max_period = s.max_period;
        cfg.warmup_events = s.warmup_events;
        Ok(cfg)
    }
}

pub(crate) fn group_letter(i: usize) -> String {
    let mut s = String::new();
    let mut i = i;
    loop {
        s.insert(0, (b'A' + (i % 26) as u8) as char);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    s
}

pub const DEFAULT_RATES_MBPS: [f64; 5] = [4.0, 12.0, 40.0, 120.0, 200.0];
pub const DEFAULT_RTTS_MS: [f64; 5] = [5.0, 10.0, 20.0, 50.0, 100.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "d_rates")]
    pub rates_mbps: Vec<f64>,
    #[serde(default = "d_rtts")]
    pub base_rtts_ms: Vec<f64>,
    #[serde(default = "d_buffers")]
    pub buffers_ms: Vec<f64>,
    /// Flow counts per group of the template; each entry is one cell
    /// column. Empty means the template's own counts.
    #[serde(default)]
    pub flow_counts: Vec<Vec<usize>>,
    #[serde(default = "d_max_cells")]
    pub max_cells: usize,
    /// Concurrent cells; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
}

fn d_rates() -> Vec<f64> {
    DEFAULT_RATES_MBPS.to_vec()
}
fn d_rtts() -> Vec<f64> {
    DEFAULT_RTTS_MS.to_vec()
}
fn d_buffers() -> Vec<f64> {
    vec![25.0]
}
fn d_max_cells() -> usize {
    10_000
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            rates_mbps: d_rates(),
            base_rtts_ms: d_rtts(),
            buffers_ms: d_buffers(),
            flow_counts: Vec::new(),
            max_cells: d_max_cells(),
            workers: 0,
        }
    }
}

/// Everything in a scenario except the link, which the grid supplies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSection {
    #[serde(default = "default_mss")]
    pub mss: u32,
    #[serde(default)]
    pub bottleneck: BottleneckSection,
    pub flows: Vec<FlowSection>,
    #[serde(default)]
    pub measurement: MeasurementSection,
    #[serde(default)]
    pub sim: SimSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSection,
    pub scenario: TemplateSection,
}

impl GridConfig {
    pub fn from_toml(text: &str) -> Result<GridConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<GridConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GridConfig::from_toml(&text)
    }
}
