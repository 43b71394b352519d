//! Trains the denoiser on the desk configuration and samples placements
//! from it.
//!
//! `cargo run --release --example train_and_sample -- efgd 60`

use std::path::Path;

use sensorplace::config::ExperimentConfig;
use sensorplace::trainer::{inference, train_with, Mode, TrainConfig};

fn main() -> sensorplace::Result<()> {
    let mut args = std::env::args().skip(1);
    let mode: Mode = args.next().map(|s| s.parse()).transpose()?.unwrap_or_default();
    let epochs = args.next().and_then(|s| s.parse().ok()).unwrap_or(60);

    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/desk-ieee9.toml");
    let cfg = ExperimentConfig::load(&config)?;
    let problem = cfg.problem()?;
    let tc = TrainConfig { mode, epochs, ..cfg.train_config() };

    let out = train_with(&tc, &problem, |m, _| {
        if m.epoch % 5 == 0 {
            println!(
                "epoch {:3}  avg reward {:8.1}  feasible {:.2}  buffer floor {:8.1}",
                m.epoch,
                m.avg_reward,
                m.feasible_fraction,
                m.buffer_min_reward.unwrap_or(f64::NAN)
            );
        }
        Ok(())
    })?;

    let conditions = cfg.conditions(&problem);
    let records = inference(&out.params, &tc.schedule()?, &problem, cfg.evaluate.count, &conditions, cfg.seeds().inference)?;
    let best = records
        .iter()
        .max_by(|a, b| a.summary.mean_reward.total_cmp(&b.summary.mean_reward))
        .expect("count > 0");
    let refined = problem.evaluate(&best.raw, problem.nominal_links()).refined;
    println!(
        "best of {}: nodes {:?} links {:?}  reward {:.1} ± {:.1}",
        records.len(),
        refined.selected(),
        refined.links(),
        best.summary.mean_reward,
        best.summary.std_reward
    );
    Ok(())
}
