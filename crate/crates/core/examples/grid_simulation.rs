//! Simulates a bundled grid with load noise and one-step branch outages and
//! checks current conservation on every snapshot.
//!
//! `cargo run --example grid_simulation -- ieee14`

use sensorplace::grid::{generate_scenarios, kcl_residual, load_bundled, spread_anomaly_times};

fn main() -> sensorplace::Result<()> {
    let case = std::env::args().nth(1).unwrap_or_else(|| "ieee14".into());
    let grid = load_bundled(&case)?;
    println!("{case}: {} buses, {} branches, slack bus {}", grid.node_count(), grid.edge_count(), grid.bus_ids[grid.slack]);

    let times = spread_anomaly_times(200, 10, 33, 1)?;
    let set = generate_scenarios(&grid, 200, &times, 0.005, 1)?;
    let worst = set.snapshots.iter().map(|s| kcl_residual(&grid, s)).fold(0.0, f64::max);
    println!("{} snapshots, max KCL residual {worst:.2e}", set.len());

    for snap in set.snapshots.iter().filter(|s| s.anomaly_label.is_some()) {
        let e = snap.anomaly_label.unwrap();
        let b = &grid.branches[e];
        let v_min = snap.node_voltage.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        println!(
            "t={:3}  branch {:2} ({}-{}) open, lowest |V| = {v_min:.4}",
            snap.t, e, grid.bus_ids[b.from], grid.bus_ids[b.to]
        );
    }
    Ok(())
}
