//! Loads an experiment file, prints the derived seeds and hash, and writes
//! the scenario set to a temporary directory.
//!
//! `cargo run --example experiment_config -- path/to/run.toml`

use std::path::PathBuf;

use sensorplace::cli::cmd_simulate;
use sensorplace::config::ExperimentConfig;

fn main() -> sensorplace::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/desk-ieee9.toml"));
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.validate()?;
    println!("{}", cfg.to_toml());
    println!("config hash {}", cfg.hash());
    println!("{:?}", cfg.seeds());

    cfg.out_dir = std::env::temp_dir().join("sensorplace-example");
    let written = cmd_simulate(&cfg)?;
    println!("scenarios written to {}", written.display());
    Ok(())
}
