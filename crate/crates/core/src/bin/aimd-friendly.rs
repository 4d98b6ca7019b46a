use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use aimd_friendly::chain::{self, McConfig, StationaryOptions};
use aimd_friendly::error::{Error, Result};
use aimd_friendly::harness::{self, GridConfig, ScenarioConfig};
use aimd_friendly::ratio::Ratio;
use aimd_friendly::report;
use aimd_friendly::sim;

#[derive(Parser)]
#[command(name = "aimd-friendly", version, about = "AIMD Reno-friendliness calculator and simulator")]
struct Cli {
    /// Master seed; overrides the config file's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print nothing but errors.
    #[arg(long, global = true)]
    quiet: bool,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reno-friendly additive increase for a decrease factor.
    AiFactor {
        #[arg(long)]
        b: Ratio,
    },
    /// Which flows a congestion event hits.
    Probs {
        /// Packet rates, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        rates: Vec<Ratio>,
        #[arg(long, default_value_t = 1)]
        losses: u32,
    },
    /// Run one scenario and summarize normalized rates.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace_csv: Option<PathBuf>,
        /// Directory for SVG plots.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Sweep a grid of scenarios into a summary CSV.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Solve the congestion-event Markov chain of a tail-drop scenario.
    Chain {
        #[arg(long)]
        config: PathBuf,
        /// Write the stationary distribution (state, probability).
        #[arg(long)]
        dist_csv: Option<PathBuf>,
        /// Write per-flow rates (flow, long_run_rate, ratio_to_fair).
        #[arg(long)]
        rates_csv: Option<PathBuf>,
    },
    /// Monte-Carlo over seeds of a stochastic scenario.
    Mc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut c = ScenarioConfig::load(path)?;
    if let Some(s) = seed {
        c.seed = s;
    }
    Ok(c)
}

fn run(cli: Cli) -> Result<()> {
    let say = |text: String| {
        if !cli.quiet {
            print!("{text}");
        }
    };
    match cli.cmd {
        Cmd::AiFactor { b } => {
            let r = report::ai_factor(&b)?;
            say(if cli.json {
                format!("{}\n", serde_json::to_string(&r).expect("json"))
            } else {
                format!("{}\n", r.text())
            });
        }
        Cmd::Probs { rates, losses } => {
            let table = report::hit_table(&rates, losses)?;
            say(if cli.json {
                format!("{}\n", serde_json::to_string(&table).expect("json"))
            } else {
                report::hit_table_text(&table)
            });
        }
        Cmd::Simulate { config, trace_csv, svg } => {
            let cfg = load_scenario(&config, cli.seed)?;
            let run = harness::run_scenario(&cfg)?;
            if let Some(p) = trace_csv {
                sim::write_trace_csv(&run.trace, create(&p)?)?;
            }
            if let Some(dir) = svg {
                let title = config.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
                harness::render_plots(&run.trace, &[], &dir, title)?;
            }
            if cli.json {
                say(format!("{}\n", serde_json::to_string(&run.summary).expect("json")));
            } else {
                let mut t = String::from("group  cca      flows  p1      mean    p99     samples\n");
                for g in &run.summary.groups {
                    t.push_str(&format!(
                        "{:<6} {:<8} {:<6} {:<7.4} {:<7.4} {:<7.4} {}{}\n",
                        g.label,
                        g.cca,
                        g.n_flows,
                        g.p1,
                        g.mean,
                        g.p99,
                        g.samples,
                        if g.ordered { "" } else { "  (P1 <= mean <= P99 violated)" }
                    ));
                }
                say(t);
            }
        }
        Cmd::Grid { config, out, svg } => {
            let mut grid = GridConfig::load(&config)?;
            if let Some(s) = cli.seed {
                grid.seed = s;
            }
            let rows = harness::run_grid(&grid)?;
            harness::write_summary_csv(&rows, create(&out)?)?;
            if let Some(dir) = svg {
                std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
                    path: dir.clone(),
                    source,
                })?;
                harness::plot_whiskers(&rows, &dir.join("whiskers.svg"), "normalized rate")?;
            }
            let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
            say(if cli.json {
                format!("{}\n", json!({ "rows": rows.len(), "flagged": failed, "out": out }))
            } else {
                format!("{} rows ({} flagged) written to {}\n", rows.len(), failed, out.display())
            });
        }
        Cmd::Chain {
            config,
            dist_csv,
            rates_csv,
        } => {
            let cfg = load_scenario(&config, cli.seed)?;
            let scenario = cfg.scenario()?;
            let c = chain::build_chain(&scenario, cfg.bottleneck()?, &cfg.chain.options())?;
            let st = chain::stationary(&c, &StationaryOptions::default())?;
            if let Some(p) = dist_csv {
                chain::write_distribution_csv(&c, &st, create(&p)?)?;
            }
            if let Some(p) = rates_csv {
                chain::write_rates_csv(&st, create(&p)?)?;
            }
            if cli.json {
                say(format!(
                    "{}\n",
                    json!({
                        "states": c.len(),
                        "recurrent_states": st.class.len(),
                        "closed_classes": st.closed_classes,
                        "residual": st.residual,
                        "rates_pps": st.rates_pps,
                        "ratio_to_fair": st.ratio_to_fair,
                    })
                ));
            } else {
                let mut t = format!(
                    "{} states, {} recurrent ({} closed classes), residual {:.1e}\nflow  cca      long_run_rate  ratio_to_fair\n",
                    c.len(),
                    st.class.len(),
                    st.closed_classes,
                    st.residual
                );
                for (i, f) in scenario.flows().iter().enumerate() {
                    t.push_str(&format!(
                        "{:<5} {:<8} {:<14.3} {:.4}\n",
                        i,
                        f.kind.label(),
                        st.rates_pps[i],
                        st.ratio_to_fair[i]
                    ));
                }
                say(t);
            }
        }
        Cmd::Mc { config, seeds } => {
            let cfg = load_scenario(&config, cli.seed)?;
            let sim_cfg = cfg.sim_config()?;
            let mc = McConfig {
                seeds: (0..seeds).map(|i| cfg.seed.wrapping_add(i)).collect(),
                warmup: cfg.measurement.warmup_s,
                interval: cfg.measurement.interval_s,
                samples: cfg.measurement.samples,
            };
            let r = chain::monte_carlo(&sim_cfg, &mc)?;
            let labels = cfg.group_labels();
            if cli.json {
                let est = |e: &chain::Estimate| json!({ "mean": e.mean, "half_width": e.half_width, "n": e.n });
                say(format!(
                    "{}\n",
                    json!({
                        "groups": r.per_group.iter().zip(&labels).map(|(e, l)| json!({ "label": l, "rate": est(e) })).collect::<Vec<_>>(),
                        "ratio": r.group_ratio.as_ref().map(est),
                    })
                ));
            } else {
                let mut t = format!("{} seeds, 95% intervals of mean normalized rate\n", mc.seeds.len());
                for (e, l) in r.per_group.iter().zip(&labels) {
                    t.push_str(&format!("{l:<6} {e}\n"));
                }
                if let Some(e) = &r.group_ratio {
                    t.push_str(&format!("{}/{} {e}\n", labels[1], labels[0]));
                }
                say(t);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
