//! Sweeps over link rate, base RTT, buffer depth and flow counts.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::config::{group_letter, GridConfig, LinkSection, ScenarioConfig};
use crate::harness::stats::run_scenario;

/// One point of the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub id: String,
    pub rate_mbps: f64,
    pub base_rtt_ms: f64,
    pub buffer_ms: f64,
    pub counts: Vec<usize>,
    pub seed: u64,
}

/// One line of the summary table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario_id: String,
    pub link_mbps: f64,
    pub base_rtt_ms: f64,
    pub buffer_ms: f64,
    pub aqm: String,
    pub flow_group: String,
    pub cca: String,
    pub n_flows: usize,
    pub p1: Option<f64>,
    pub mean: Option<f64>,
    pub p99: Option<f64>,
    pub samples: Option<usize>,
    pub error: String,
}

/// Seed for a cell: the first 8 bytes of `SHA-256(master || id)`.
pub fn cell_seed(master: u64, id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// `A2-B8` style label for per-group counts.
pub fn combo_label(labels: &[String], counts: &[usize]) -> String {
    labels
        .iter()
        .zip(counts)
        .map(|(l, c)| format!("{l}{c}"))
        .collect::<Vec<_>>()
        .join("-")
}

fn labels(grid: &GridConfig) -> Vec<String> {
    grid.scenario
        .flows
        .iter()
        .enumerate()
        .map(|(i, f)| f.label.clone().unwrap_or_else(|| group_letter(i)))
        .collect()
}

/// Cells in canonical order: rate, then RTT, then buffer, then flow counts.
pub fn cells(grid: &GridConfig) -> Result<Vec<Cell>> {
    let g = &grid.grid;
    if g.rates_mbps.is_empty() || g.base_rtts_ms.is_empty() || g.buffers_ms.is_empty() {
        return Err(Error::Config("grid axes must not be empty".into()));
    }
    let groups = grid.scenario.flows.len();
    if groups == 0 {
        return Err(Error::NoFlows);
    }
    let combos: Vec<Vec<usize>> = if g.flow_counts.is_empty() {
        vec![grid.scenario.flows.iter().map(|f| f.count).collect()]
    } else {
        g.flow_counts.clone()
    };
    if let Some(bad) = combos.iter().find(|c| c.len() != groups) {
        return Err(Error::Config(format!(
            "flow_counts entry {bad:?} needs one count per flow group ({groups})"
        )));
    }
    let total = g.rates_mbps.len() * g.base_rtts_ms.len() * g.buffers_ms.len() * combos.len();
    if total > g.max_cells {
        return Err(Error::Config(format!("grid has {total} cells, cap is {}", g.max_cells)));
    }
    let labels = labels(grid);
    let mut out = Vec::with_capacity(total);
    for &rate in &g.rates_mbps {
        for &rtt in &g.base_rtts_ms {
            for &buf in &g.buffers_ms {
                for counts in &combos {
                    let id = format!("r{rate}-d{rtt}-b{buf}-{}", combo_label(&labels, counts));
                    out.push(Cell {
                        seed: cell_seed(grid.seed, &id),
                        id,
                        rate_mbps: rate,
                        base_rtt_ms: rtt,
                        buffer_ms: buf,
                        counts: counts.clone(),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// The full scenario a cell runs.
pub fn cell_config(grid: &GridConfig, cell: &Cell) -> ScenarioConfig {
    let t = &grid.scenario;
    let mut flows = t.flows.clone();
    for (f, &c) in flows.iter_mut().zip(&cell.counts) {
        f.count = c;
    }
    ScenarioConfig {
        seed: cell.seed,
        link: LinkSection {
            rate_mbps: cell.rate_mbps,
            base_rtt_ms: cell.base_rtt_ms,
            mss: t.mss,
            buffer_ms: Some(cell.buffer_ms),
            buffer_pkts: None,
        },
        bottleneck: t.bottleneck.clone(),
        flows,
        measurement: t.measurement.clone(),
        sim: t.sim.clone(),
        chain: Default::default(),
    }
}

/// Runs one cell; failures become rows with the error column set.
pub fn run_cell(grid: &GridConfig, cell: &Cell) -> Vec<SummaryRow> {
    let cfg = cell_config(grid, cell);
    let aqm = match cfg.bottleneck() {
        Ok(b) => b.label().to_string(),
        Err(_) => format!("{:?}", cfg.bottleneck.aqm).to_lowercase(),
    };
    let base = |label: &str, cca: &str, n: usize| SummaryRow {
        scenario_id: cell.id.clone(),
        link_mbps: cell.rate_mbps,
        base_rtt_ms: cell.base_rtt_ms,
        buffer_ms: cell.buffer_ms,
        aqm: aqm.clone(),
        flow_group: label.to_string(),
        cca: cca.to_string(),
        n_flows: n,
        p1: None,
        mean: None,
        p99: None,
        samples: None,
        error: String::new(),
    };
    match run_scenario(&cfg) {
        Ok(run) => run
            .summary
            .groups
            .iter()
            .map(|g| SummaryRow {
                p1: Some(g.p1),
                mean: Some(g.mean),
                p99: Some(g.p99),
                samples: Some(g.samples),
                error: if g.ordered { String::new() } else { "P1 <= mean <= P99 violated".into() },
                ..base(&g.label, &g.cca, g.n_flows)
            })
            .collect(),
        Err(e) => cfg
            .flows
            .iter()
            .zip(cfg.group_labels())
            .map(|(f, l)| SummaryRow {
                error: e.to_string(),
                ..base(&l, &f.cca.to_lowercase(), f.count)
            })
            .collect(),
    }
}

/// Runs every cell, `workers` at a time, and returns rows in canonical
/// cell order.
pub fn run_grid(grid: &GridConfig) -> Result<Vec<SummaryRow>> {
    let cells = cells(grid)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(grid.grid.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let rows: Vec<Vec<SummaryRow>> = pool.install(|| cells.par_iter().map(|c| run_cell(grid, c)).collect());
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<summary csv>", e))?;
    Ok(())
}

pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
