//! Scores the three reference strategies on the desk configuration.
//!
//! `cargo run --release --example baseline_comparison -- 3`

use std::path::Path;

use sensorplace::baselines::Baseline;
use sensorplace::cli::baseline_placement;
use sensorplace::config::ExperimentConfig;

fn main() -> sensorplace::Result<()> {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/desk-ieee9.toml");
    let mut cfg = ExperimentConfig::load(&config)?;
    cfg.seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let problem = cfg.problem()?;
    let conditions = cfg.conditions(&problem);
    println!("budget {}, {} test conditions", cfg.reward.budget, conditions.len());
    for b in Baseline::ALL {
        match baseline_placement(&cfg, &problem, b) {
            Ok(p) => {
                let s = problem.evaluate_over(&p, &conditions);
                println!(
                    "{:18} nodes {:?}  reward {:8.1} ± {:7.1}  detection {:.2}  feasible {:.2}",
                    b.name(),
                    p.selected(),
                    s.mean_reward,
                    s.std_reward,
                    s.detection,
                    s.feasible_fraction
                );
            }
            Err(e) => println!("{:18} failed: {e}", b.name()),
        }
    }
    Ok(())
}
