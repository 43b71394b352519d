//! Per-sensor detection scores on a simulated scenario set and the greedy
//! detection-driven sensor set.
//!
//! `cargo run --example anomaly_detection -- ieee14`

use sensorplace::baselines::greedy_accuracy;
use sensorplace::cyber::PathLossParams;
use sensorplace::detect::DetectionConfig;
use sensorplace::grid::load_bundled;
use sensorplace::placement::RewardConfig;
use sensorplace::problem::{Problem, ScenarioParams};

fn main() -> sensorplace::Result<()> {
    let case = std::env::args().nth(1).unwrap_or_else(|| "ieee14".into());
    let grid = load_bundled(&case)?;
    let ids = grid.bus_ids.clone();
    let reward = RewardConfig { budget: 6, ..RewardConfig::default() };
    let problem = Problem::generate(grid, &ScenarioParams::default(), PathLossParams::default(), DetectionConfig::default(), reward, 11)?;

    let table = problem.score_table();
    println!("{} anomalies; standalone scores:", table.anomaly_count());
    for v in 0..problem.node_count() {
        println!(
            "  bus {:3}: detection {:.2}  false alarms {:.3}",
            ids[v],
            table.detection_score(&[v]),
            table.false_alarm_rate(&[v])
        );
    }
    let all: Vec<usize> = (0..problem.node_count()).collect();
    println!("every bus monitored: detection {:.2}", table.detection_score(&all));

    let greedy = greedy_accuracy(&problem, reward.budget).selected();
    let buses: Vec<i64> = greedy.iter().map(|&v| ids[v]).collect();
    println!("greedy set {buses:?}: detection {:.2}", table.detection_score(&greedy));
    Ok(())
}
