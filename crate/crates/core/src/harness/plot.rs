//! SVG output: sawtooth traces and P1/mean/P99 whiskers.

use std::ops::Range;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::harness::grid::SummaryRow;
use crate::sim::Trace;

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(140, 86, 75),
];

fn color(i: usize) -> RGBColor {
    PALETTE[i % PALETTE.len()]
}

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

/// A readable slice of a trace: three converged cycles when known, else
/// the last `fallback` rounds.
pub fn sawtooth_range(trace: &Trace, fallback: usize) -> Range<usize> {
    let len = trace.records.len();
    if let Some(c) = trace.converged_cycle() {
        let span = c.end + 1 - c.start;
        let start = (c.end + 1).saturating_sub(3 * span);
        return start..c.end + 1;
    }
    len.saturating_sub(fallback)..len
}

/// Two panels: windows per round on the left, normalized rates against
/// time on the right.
pub fn plot_sawtooth(trace: &Trace, range: Range<usize>, path: &Path, title: &str) -> Result<()> {
    let rows = trace.records.get(range).unwrap_or(&[]);
    if rows.is_empty() || trace.n_flows() == 0 {
        return Err(Error::NothingToPlot);
    }
    let n = trace.n_flows();
    let fair = trace.fair_share_pkts();
    let r0 = rows[0].round as f64;
    let r1 = rows[rows.len() - 1].round as f64 + 1.0;
    let w_max = rows
        .iter()
        .flat_map(|r| r.cwnd.iter().copied())
        .fold(0.0, f64::max)
        * 1.05;
    let t0 = rows[0].t_start;
    let t1 = rows[rows.len() - 1].t_start + rows[rows.len() - 1].rtt;
    let rate_max = rows
        .iter()
        .flat_map(|r| r.rate.iter().map(move |x| x / fair))
        .fold(0.0, f64::max)
        * 1.1;

    let root = SVGBackend::new(path, (1200, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let root = root.titled(title, ("sans-serif", 18)).map_err(plot_err)?;
    let (left, right) = root.split_horizontally(600);

    let mut ch = ChartBuilder::on(&left)
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(48)
        .build_cartesian_2d(r0..r1, 0.0..w_max.max(1.0))
        .map_err(plot_err)?;
    ch.configure_mesh()
        .x_desc("round")
        .y_desc("cwnd [pkt]")
        .draw()
        .map_err(plot_err)?;
    for i in 0..n {
        ch.draw_series(LineSeries::new(
            rows.iter().map(|r| (r.round as f64, r.cwnd[i])),
            color(i),
        ))
        .map_err(plot_err)?
        .label(format!("{} #{i}", trace.kinds[i].label()))
        .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color(i)));
    }
    ch.configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(plot_err)?;

    let mut ch = ChartBuilder::on(&right)
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(48)
        .build_cartesian_2d(t0..t1, 0.0..rate_max.max(0.1))
        .map_err(plot_err)?;
    ch.configure_mesh()
        .x_desc("time [s]")
        .y_desc("rate / fair share")
        .draw()
        .map_err(plot_err)?;
    for i in 0..n {
        // rates are constant over each round: draw steps
        let pts = rows.iter().flat_map(|r| {
            let y = r.rate[i] / fair;
            [(r.t_start, y), (r.t_start + r.rtt, y)]
        });
        ch.draw_series(LineSeries::new(pts, color(i))).map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

/// One whisker (P1 to P99, dot at the mean) per flow group, clustered by
/// scenario. Rows without statistics are skipped.
pub fn plot_whiskers(rows: &[SummaryRow], path: &Path, title: &str) -> Result<()> {
    let ok: Vec<&SummaryRow> = rows.iter().filter(|r| r.mean.is_some()).collect();
    if ok.is_empty() {
        return Err(Error::NothingToPlot);
    }
    let mut scenarios: Vec<&str> = Vec::new();
    let mut groups: Vec<&str> = Vec::new();
    for r in &ok {
        if !scenarios.contains(&r.scenario_id.as_str()) {
            scenarios.push(&r.scenario_id);
        }
        if !groups.contains(&r.flow_group.as_str()) {
            groups.push(&r.flow_group);
        }
    }
    let y_max = ok.iter().filter_map(|r| r.p99).fold(1.0, f64::max) * 1.1;
    let width = (160 + 60 * scenarios.len()).clamp(640, 4000) as u32;

    let root = SVGBackend::new(path, (width, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut ch = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(90)
        .y_label_area_size(48)
        .build_cartesian_2d(-0.5..scenarios.len() as f64 - 0.5, 0.0..y_max)
        .map_err(plot_err)?;
    let names: Vec<String> = scenarios.iter().map(|s| s.to_string()).collect();
    ch.configure_mesh()
        .disable_x_mesh()
        .x_labels(scenarios.len().min(60))
        .x_label_formatter(&|x| {
            let i = x.round();
            if (x - i).abs() < 1e-6 && i >= 0.0 {
                names.get(i as usize).cloned().unwrap_or_default()
            } else {
                String::new()
            }
        })
        .x_label_style(("sans-serif", 10).into_font().transform(FontTransform::Rotate90))
        .y_desc("normalized rate")
        .draw()
        .map_err(plot_err)?;
    ch.draw_series(std::iter::once(PathElement::new(
        vec![(-0.5, 1.0), (scenarios.len() as f64 - 0.5, 1.0)],
        BLACK.mix(0.3),
    )))
    .map_err(plot_err)?;

    let slot = 0.8 / groups.len() as f64;
    for (gi, g) in groups.iter().enumerate() {
        let c = color(gi);
        let pts: Vec<(f64, f64, f64, f64)> = ok
            .iter()
            .filter(|r| r.flow_group == *g)
            .map(|r| {
                let si = scenarios.iter().position(|s| *s == r.scenario_id).unwrap_or(0);
                let x = si as f64 - 0.4 + slot * (gi as f64 + 0.5);
                (x, r.p1.unwrap_or(0.0), r.mean.unwrap_or(0.0), r.p99.unwrap_or(0.0))
            })
            .collect();
        ch.draw_series(
            pts.iter()
                .map(|&(x, lo, _, hi)| PathElement::new(vec![(x, lo), (x, hi)], c.stroke_width(2))),
        )
        .map_err(plot_err)?
        .label(g.to_string())
        .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c));
        ch.draw_series(pts.iter().map(|&(x, _, m, _)| Circle::new((x, m), 3, c.filled())))
            .map_err(plot_err)?;
    }
    ch.configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Writes `sawtooth.svg` (and `whiskers.svg` when rows are given) into
/// `dir`, returning the paths written.
pub fn render_plots(trace: &Trace, rows: &[SummaryRow], dir: &Path, title: &str) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    let saw = dir.join("sawtooth.svg");
    plot_sawtooth(trace, sawtooth_range(trace, 600), &saw, title)?;
    out.push(saw);
    if !rows.is_empty() {
        let wh = dir.join("whiskers.svg");
        plot_whiskers(rows, &wh, title)?;
        out.push(wh);
    }
    Ok(out)
}
