//! Experiment harness behind the `sensorplace` binary.
//!
//! ```text
//! sensorplace simulate --config exp.toml
//! sensorplace train    --config exp.toml [--mode gdpo]
//! sensorplace evaluate --config exp.toml [--checkpoint path] [--count 50]
//! sensorplace baseline --config exp.toml --which greedy-robustness
//! ```
//!
//! Every command also takes `--seed`, `--out` and `--threads`. Exit codes:
//! 0 success, 1 usage or configuration error, 2 runtime failure.
//!
//! Files written under the output directory:
//!
//! | command | files |
//! |---------|-------|
//! | simulate | `scenarios.json` |
//! | train | `metrics.csv`, `checkpoints/epoch_NNNN.ckpt`, `final.ckpt` |
//! | evaluate | `placements.json`, `placements.csv`, `summary.json` |
//! | baseline | `baseline-<name>.json` |
//!
//! Each command also writes `<command>.manifest.json` holding the config
//! hash, the master and derived seeds, the crate version and the full
//! configuration. Nothing written depends on wall-clock time unless
//! `output.record_wall_time` is set.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::baselines::{greedy_accuracy, greedy_robustness, random_placement, Baseline};
use crate::config::{ExperimentConfig, Seeds};
use crate::denoiser::{load_checkpoint, save_checkpoint};
use crate::error::{Error, Result};
use crate::placement::PlacementGraph;
use crate::problem::{ConditionSummary, Problem};
use crate::trainer::{inference, train_with, EpochMetrics, Mode};

#[derive(Parser, Debug)]
#[command(name = "sensorplace", version, about = "Robust wireless sensor placement for power grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Override the training mode (ddpo, gdpo, efgd).
    #[arg(long)]
    mode: Option<Mode>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate and store the training scenario set.
    Simulate(Common),
    /// Train the denoiser.
    Train(Common),
    /// Generate placements from a checkpoint and score them.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Defaults to `final.ckpt` in the output directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Number of placements; defaults to `evaluate.count`.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Run a reference strategy and score it.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// greedy-accuracy, greedy-robustness or random.
        #[arg(long)]
        which: String,
    },
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

enum Failure {
    Usage(Error),
    Runtime(Error),
}

fn dispatch(cli: Cli) -> std::result::Result<(), Failure> {
    let common = match &cli.command {
        Command::Simulate(c) | Command::Train(c) => c,
        Command::Evaluate { common, .. } | Command::Baseline { common, .. } => common,
    };
    let cfg = load_config(common).map_err(Failure::Usage)?;
    let baseline = match &cli.command {
        Command::Baseline { which, .. } => Some(which.parse::<Baseline>().map_err(Failure::Usage)?),
        _ => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads.max(1))
        .build()
        .map_err(|e| Failure::Runtime(Error::InvalidArgument(e.to_string())))?;
    pool.install(|| match &cli.command {
        Command::Simulate(_) => cmd_simulate(&cfg).map(drop),
        Command::Train(_) => cmd_train(&cfg).map(drop),
        Command::Evaluate { checkpoint, count, .. } => {
            let ckpt = checkpoint.clone().unwrap_or_else(|| cfg.out_dir().join("final.ckpt"));
            cmd_evaluate(&cfg, &ckpt, count.unwrap_or(cfg.evaluate.count)).map(drop)
        }
        Command::Baseline { .. } => cmd_baseline(&cfg, baseline.expect("parsed above")).map(drop),
    })
    .map_err(Failure::Runtime)
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = if out.is_absolute() {
            out.clone()
        } else {
            std::env::current_dir().map_err(|e| Error::io(".", e))?.join(out)
        };
    }
    if let Some(m) = common.mode {
        cfg.train.mode = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    crate_version: &'a str,
    config_hash: String,
    seed: u64,
    seeds: Seeds,
    config: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    checkpoint: Option<String>,
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    write(path, &text)
}

fn write_manifest(cfg: &ExperimentConfig, command: &str, checkpoint: Option<&Path>) -> Result<PathBuf> {
    let path = cfg.out_dir().join(format!("{command}.manifest.json"));
    let checkpoint = match checkpoint {
        Some(p) => {
            use sha2::{Digest, Sha256};
            let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
            Some(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
        }
        None => None,
    };
    let m = Manifest {
        command,
        crate_version: env!("CARGO_PKG_VERSION"),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        seeds: cfg.seeds(),
        config: cfg.to_toml(),
        checkpoint,
    };
    write_json(&path, &m)?;
    Ok(path)
}

/// Writes the training scenario set as `scenarios.json`.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let problem = cfg.problem()?;
    let path = cfg.out_dir().join("scenarios.json");
    write_json(&path, &problem.scenarios)?;
    write_manifest(cfg, "simulate", None)?;
    Ok(path)
}

fn metrics_csv(metrics: &[EpochMetrics], wall_time: bool) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(["epoch", "avg_reward", "feasible_fraction", "buffer_min_reward", "wall_time_s"])
        .map_err(csv_err)?;
    for m in metrics {
        w.write_record([
            m.epoch.to_string(),
            m.avg_reward.to_string(),
            m.feasible_fraction.to_string(),
            m.buffer_min_reward.map(|r| r.to_string()).unwrap_or_default(),
            if wall_time { format!("{:.3}", m.wall_time_s) } else { String::new() },
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

/// Trains the denoiser; writes `metrics.csv`, periodic checkpoints and
/// `final.ckpt`. Returns the per-epoch metrics.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<Vec<EpochMetrics>> {
    let problem = cfg.problem()?;
    let out = cfg.out_dir();
    let every = cfg.output.checkpoint_every;
    let outcome = train_with(&cfg.train_config(), &problem, |m, params| {
        if every > 0 && (m.epoch + 1) % every == 0 {
            let path = out.join("checkpoints").join(format!("epoch_{:04}.ckpt", m.epoch + 1));
            let dir = out.join("checkpoints");
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            save_checkpoint(params, &path)?;
        }
        Ok(())
    })?;
    write(&out.join("metrics.csv"), &metrics_csv(&outcome.metrics, cfg.output.record_wall_time)?)?;
    let final_path = out.join("final.ckpt");
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    save_checkpoint(&outcome.params, &final_path)?;
    write_manifest(cfg, "train", None)?;
    Ok(outcome.metrics)
}

/// One scored placement as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementReport {
    pub index: usize,
    pub nodes: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub detection: f64,
    pub false_alarm_rate: f64,
    pub connectivity: f64,
    pub feasible_fraction: f64,
}

impl PlacementReport {
    fn new(index: usize, raw: &PlacementGraph, s: &ConditionSummary) -> Self {
        let rec = raw.to_record();
        Self {
            index,
            nodes: rec.nodes,
            edges: rec.edges,
            mean_reward: s.mean_reward,
            std_reward: s.std_reward,
            detection: s.detection,
            false_alarm_rate: s.false_alarm_rate,
            connectivity: s.mean_connectivity,
            feasible_fraction: s.feasible_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationSummary {
    pub count: usize,
    pub conditions: usize,
    pub mean_reward: f64,
    pub best: PlacementReport,
}

fn summarize(reports: &[PlacementReport], conditions: usize) -> EvaluationSummary {
    let best = reports
        .iter()
        .fold(None::<&PlacementReport>, |acc, r| match acc {
            Some(b) if b.mean_reward >= r.mean_reward => Some(b),
            _ => Some(r),
        })
        .expect("at least one placement");
    EvaluationSummary {
        count: reports.len(),
        conditions,
        mean_reward: reports.iter().map(|r| r.mean_reward).sum::<f64>() / reports.len() as f64,
        best: best.clone(),
    }
}

fn placements_csv(reports: &[PlacementReport]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record([
        "index",
        "nodes",
        "mean_reward",
        "std_reward",
        "detection",
        "false_alarm_rate",
        "connectivity",
        "feasible_fraction",
    ])
    .map_err(csv_err)?;
    for r in reports {
        let nodes: Vec<String> = r.nodes.iter().map(|v| v.to_string()).collect();
        w.write_record([
            r.index.to_string(),
            nodes.join(" "),
            r.mean_reward.to_string(),
            r.std_reward.to_string(),
            r.detection.to_string(),
            r.false_alarm_rate.to_string(),
            r.connectivity.to_string(),
            r.feasible_fraction.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

/// Generates `count` placements from the checkpoint and scores each over
/// the configured test conditions.
pub fn cmd_evaluate(cfg: &ExperimentConfig, checkpoint: &Path, count: usize) -> Result<EvaluationSummary> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be positive".into()));
    }
    let params = load_checkpoint(checkpoint)?;
    let problem = cfg.problem()?;
    let conditions = cfg.conditions(&problem);
    let sched = cfg.train.schedule()?;
    let records = inference(&params, &sched, &problem, count, &conditions, cfg.seeds().inference)?;
    let reports: Vec<PlacementReport> = records
        .iter()
        .enumerate()
        .map(|(k, r)| PlacementReport::new(k, &r.raw, &r.summary))
        .collect();
    let summary = summarize(&reports, conditions.len());
    let out = cfg.out_dir();
    write_json(&out.join("placements.json"), &reports)?;
    write(&out.join("placements.csv"), &placements_csv(&reports)?)?;
    write_json(&out.join("summary.json"), &summary)?;
    write_manifest(cfg, "evaluate", Some(checkpoint))?;
    Ok(summary)
}

/// The placement a baseline produces for this configuration.
pub fn baseline_placement(cfg: &ExperimentConfig, problem: &Problem, which: Baseline) -> Result<PlacementGraph> {
    let budget = cfg.reward.budget;
    Ok(match which {
        Baseline::GreedyAccuracy => greedy_accuracy(problem, budget),
        Baseline::GreedyRobustness => greedy_robustness(problem, budget)?,
        Baseline::Random => random_placement(problem, budget, &mut ChaCha8Rng::seed_from_u64(cfg.seeds().baseline)),
    })
}

#[derive(Serialize)]
struct BaselineReport<'a> {
    baseline: &'a str,
    placement: PlacementReport,
}

/// Runs a baseline and scores it like [`cmd_evaluate`] scores placements.
pub fn cmd_baseline(cfg: &ExperimentConfig, which: Baseline) -> Result<PlacementReport> {
    let problem = cfg.problem()?;
    let conditions = cfg.conditions(&problem);
    let placement = baseline_placement(cfg, &problem, which)?;
    let report = PlacementReport::new(0, &placement, &problem.evaluate_over(&placement, &conditions));
    let out = cfg.out_dir();
    write_json(
        &out.join(format!("baseline-{}.json", which.name())),
        &BaselineReport {
            baseline: which.name(),
            placement: report.clone(),
        },
    )?;
    write_manifest(cfg, &format!("baseline-{}", which.name()), None)?;
    Ok(report)
}
