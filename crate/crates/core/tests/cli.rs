//! End-to-end runs of the command-line tool.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aimd-friendly"))
        .args(args)
        .output()
        .expect("spawn")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"
seed = 5
[link]
rate_mbps = 12
base_rtt_ms = 10
buffer_pkts = 10
[bottleneck]
sync = "hits"
losses_per_event = 2
[[flows]]
cca = "reno"
[[flows]]
cca = "creno"
b = 0.7
[measurement]
samples = 50
warmup_s = 2
"#;

#[test]
fn ai_factor_and_probs() {
    assert_eq!(ok(&["ai-factor", "--b", "0.7"]), "9/17 (≈ 0.5294)\n");
    let v: serde_json::Value = serde_json::from_str(&ok(&["--json", "ai-factor", "--b", "0.7"])).unwrap();
    assert_eq!(v["approx"].as_f64().unwrap(), 9.0 / 17.0);
    assert_eq!(ok(&["probs", "--rates", "17,15"]), "{0}: 17/32 (≈ 0.5312)\n{1}: 15/32 (≈ 0.4688)\n");
    assert_eq!(ok(&["--quiet", "probs", "--rates", "17,15"]), "");
}

#[test]
fn simulate_writes_trace_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let svg = dir.path().join("svg");
    let cfg = shipped("deep_pair.toml");
    let text = ok(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--trace-csv",
        trace.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(text.starts_with("group  cca"), "{text}");
    assert_eq!(text.lines().count(), 3);
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("round,t_start_s,flow_id,cca,cwnd_pkts,queue_pkts,rtt_s,rate_pps,reduced\n"));
    assert!(svg.join("sawtooth.svg").exists());

    let v: serde_json::Value =
        serde_json::from_str(&ok(&["--json", "simulate", "--config", cfg.to_str().unwrap()])).unwrap();
    for g in v["groups"].as_array().unwrap() {
        assert!((g["mean"].as_f64().unwrap() - 1.0).abs() < 0.01);
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let c = cfg.to_str().unwrap();
    let base = ok(&["--json", "simulate", "--config", c]);
    assert_eq!(base, ok(&["--json", "simulate", "--config", c]));
    assert_eq!(base, ok(&["--json", "--seed", "5", "simulate", "--config", c]));
    assert_ne!(base, ok(&["--json", "--seed", "6", "simulate", "--config", c]));
}

#[test]
fn grid_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "grid.toml",
        r#"
        seed = 1
        [grid]
        rates_mbps = [10, 40]
        base_rtts_ms = [10]
        [[scenario.flows]]
        cca = "reno"
        [[scenario.flows]]
        cca = "creno"
        b = 0.7
        [scenario.measurement]
        samples = 20
        "#,
    );
    let out = dir.path().join("summary.csv");
    let text = ok(&[
        "grid",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--svg",
        dir.path().to_str().unwrap(),
    ]);
    assert!(text.starts_with("4 rows (0 flagged)"), "{text}");
    let rows = aimd_friendly::harness::read_summary_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(dir.path().join("whiskers.svg").exists());
}

#[test]
fn chain_and_mc() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let (dist, rates) = (dir.path().join("dist.csv"), dir.path().join("rates.csv"));
    let text = ok(&[
        "chain",
        "--config",
        cfg.to_str().unwrap(),
        "--dist-csv",
        dist.to_str().unwrap(),
        "--rates-csv",
        rates.to_str().unwrap(),
    ]);
    assert!(text.contains("recurrent"), "{text}");
    let mass: f64 = std::fs::read_to_string(&dist)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((mass - 1.0).abs() < 1e-9);
    assert_eq!(std::fs::read_to_string(&rates).unwrap().lines().count(), 3);

    let v: serde_json::Value =
        serde_json::from_str(&ok(&["--json", "mc", "--config", cfg.to_str().unwrap(), "--seeds", "4"])).unwrap();
    assert_eq!(v["groups"].as_array().unwrap().len(), 2);
    assert_eq!(v["ratio"]["n"].as_u64().unwrap(), 4);
}

#[test]
fn errors_exit_nonzero() {
    let out = run(&["ai-factor", "--b", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[link]\nrate_mbps = 40\nbase_rtt_ms = 10\nbogus = 1\n");
    let out = run(&["simulate", "--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    let out = run(&["simulate", "--config", "/nonexistent/x.toml"]);
    assert!(!out.status.success());
}

#[test]
fn shipped_configs_parse() {
    use aimd_friendly::harness::{GridConfig, ScenarioConfig};
    for name in ["deep_pair.toml", "shallow_pair.toml", "hits_pair.toml"] {
        let c = ScenarioConfig::load(&shipped(name)).unwrap();
        c.scenario().unwrap();
        c.bottleneck().unwrap();
    }
    for name in ["pie_mix.toml", "taildrop_grid.toml"] {
        let g = GridConfig::load(&shipped(name)).unwrap();
        assert!(!aimd_friendly::harness::grid::cells(&g).unwrap().is_empty());
    }
}
