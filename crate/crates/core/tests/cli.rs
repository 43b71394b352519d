use std::path::Path;
use std::process::Command;

use serde_json::Value;

use sensorplace::baselines::Baseline;
use sensorplace::cli::baseline_placement;
use sensorplace::config::ExperimentConfig;

const BIN: &str = env!("CARGO_BIN_EXE_sensorplace");

const TINY: &str = r#"
case = "ieee9"
out_dir = "out"
seed = 7

[scenario]
steps = 200
anomalies = 20

[reward]
budget = 4

[train]
trajectories = 4
epochs = 2
optimizer = "adam"
learning_rate = 1e-3

[train.denoiser]
hidden = 8
layers = 1

[evaluate]
count = 5
conditions = 3

[output]
checkpoint_every = 1
"#;

fn setup(config: &str) -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, config).unwrap();
    (dir, path.to_str().unwrap().to_string())
}

fn sensorplace(args: &[&str]) -> i32 {
    Command::new(BIN).args(args).output().unwrap().status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(sensorplace(&["--help"]), 0);
    assert_eq!(sensorplace(&[]), 1);
    assert_eq!(sensorplace(&["frobnicate"]), 1);
    assert_eq!(sensorplace(&["train", "--config", "/nonexistent/run.toml"]), 1);
    let (dir, cfg) = setup(TINY);
    assert_eq!(sensorplace(&["baseline", "--config", &cfg, "--which", "nonsense"]), 1);
    assert_eq!(sensorplace(&["train", "--config", &cfg, "--mode", "ppo"]), 1);
    // a missing checkpoint is a runtime failure
    let missing = dir.path().join("none.ckpt");
    assert_eq!(sensorplace(&["evaluate", "--config", &cfg, "--checkpoint", missing.to_str().unwrap()]), 2);
}

#[test]
fn missing_case_file_is_reported() {
    let (_dir, cfg) = setup(&TINY.replace("\"ieee9\"", "\"grids/absent.case\""));
    let out = Command::new(BIN).args(["simulate", "--config", &cfg]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.case"));
}

#[test]
fn simulate_writes_labeled_scenarios_deterministically() {
    let (dir, cfg) = setup(TINY);
    assert_eq!(sensorplace(&["simulate", "--config", &cfg]), 0);
    let path = dir.path().join("out/scenarios.json");
    let first = std::fs::read(&path).unwrap();
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["snapshots"].as_array().unwrap().len(), 200);
    assert_eq!(v["anomaly_times"].as_array().unwrap().len(), 20);
    let labeled = v["snapshots"].as_array().unwrap().iter().filter(|s| !s["anomaly_label"].is_null()).count();
    assert_eq!(labeled, 20);
    assert_eq!(sensorplace(&["simulate", "--config", &cfg]), 0);
    assert_eq!(std::fs::read(&path).unwrap(), first);
    let manifest = json(&dir.path().join("out/simulate.manifest.json"));
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn train_then_evaluate() {
    let (dir, cfg) = setup(TINY);
    let out = dir.path().join("out");
    assert_eq!(sensorplace(&["train", "--config", &cfg]), 0);
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(lines[0], "epoch,avg_reward,feasible_fraction,buffer_min_reward,wall_time_s");
    assert_eq!(lines.len(), 3);
    assert!(out.join("checkpoints/epoch_0001.ckpt").is_file());
    assert!(out.join("checkpoints/epoch_0002.ckpt").is_file());
    assert!(out.join("final.ckpt").is_file());

    assert_eq!(sensorplace(&["evaluate", "--config", &cfg, "--count", "6"]), 0);
    let placements = json(&out.join("placements.json"));
    let records = placements.as_array().unwrap();
    assert_eq!(records.len(), 6);
    let summary = json(&out.join("summary.json"));
    let best = records.iter().map(|r| r["mean_reward"].as_f64().unwrap()).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(summary["best"]["mean_reward"].as_f64().unwrap(), best);
    assert_eq!(summary["count"], 6);
    for r in records {
        for key in ["detection", "connectivity", "feasible_fraction", "std_reward"] {
            assert!(r[key].is_number(), "{key}");
        }
    }
    let csv = std::fs::read_to_string(out.join("placements.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(json(&out.join("evaluate.manifest.json"))["checkpoint"].is_string());
}

#[test]
fn single_condition_has_no_spread() {
    let (dir, cfg) = setup(&TINY.replace("conditions = 3", "conditions = 1"));
    assert_eq!(sensorplace(&["train", "--config", &cfg]), 0);
    assert_eq!(sensorplace(&["evaluate", "--config", &cfg]), 0);
    let placements = json(&dir.path().join("out/placements.json"));
    assert!(placements.as_array().unwrap().iter().all(|r| r["std_reward"] == 0.0));
}

#[test]
fn overrides_apply() {
    let (dir, cfg) = setup(TINY);
    let alt = dir.path().join("elsewhere");
    assert_eq!(
        sensorplace(&["train", "--config", &cfg, "--seed", "99", "--out", alt.to_str().unwrap(), "--mode", "gdpo", "--threads", "2"]),
        0
    );
    let manifest = json(&alt.join("train.manifest.json"));
    assert_eq!(manifest["seed"], 99);
    assert!(manifest["config"].as_str().unwrap().contains("mode = \"gdpo\""));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn modes_produce_different_metric_streams() {
    // small steps leave the sampled graphs unchanged for a few epochs
    let config = TINY
        .replace("epochs = 2", "epochs = 12")
        .replace("trajectories = 4", "trajectories = 16")
        .replace("budget = 4", "budget = 5");
    let (dir, cfg) = setup(&config);
    let read = |mode: &str| {
        let out = dir.path().join(mode);
        assert_eq!(sensorplace(&["train", "--config", &cfg, "--mode", mode, "--out", out.to_str().unwrap()]), 0);
        std::fs::read_to_string(out.join("metrics.csv")).unwrap()
    };
    let (efgd, gdpo) = (read("efgd"), read("gdpo"));
    let first_row = |s: &str| s.lines().nth(1).unwrap().split(',').nth(1).unwrap().to_string();
    assert_eq!(first_row(&efgd), first_row(&gdpo));
    assert_ne!(efgd, gdpo);
}

#[test]
fn random_baseline_is_reproducible() {
    let (dir, cfg) = setup(TINY);
    let path = dir.path().join("out/baseline-random.json");
    assert_eq!(sensorplace(&["baseline", "--config", &cfg, "--which", "random"]), 0);
    let first = std::fs::read(&path).unwrap();
    assert_eq!(sensorplace(&["baseline", "--config", &cfg, "--which", "random"]), 0);
    assert_eq!(std::fs::read(&path).unwrap(), first);
    assert_eq!(json(&path)["baseline"], "random");
}

#[test]
fn greedy_accuracy_detects_at_least_as_well_as_random() {
    let base = ExperimentConfig::from_toml(TINY, Path::new(".")).unwrap();
    let mut wins = 0;
    for seed in 0..20 {
        let cfg = ExperimentConfig { seed, ..base.clone() };
        let problem = cfg.problem().unwrap();
        let score = |b| problem.detection_score(&baseline_placement(&cfg, &problem, b).unwrap().selected());
        if score(Baseline::GreedyAccuracy) >= score(Baseline::Random) {
            wins += 1;
        }
    }
    assert!(wins >= 16, "greedy-accuracy won {wins}/20");
}
