//! Embeds a grid in the plane and reports which wireless links survive
//! path loss, nominally and under random shadowing.
//!
//! `cargo run --example cyber_layout -- ieee30`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sensorplace::cyber::{CyberLayer, PathLossParams, Shadowing};
use sensorplace::grid::load_bundled;

fn main() -> sensorplace::Result<()> {
    let case = std::env::args().nth(1).unwrap_or_else(|| "ieee30".into());
    let grid = load_bundled(&case)?;
    let params = PathLossParams::default();
    let layer = CyberLayer::from_grid(&grid, params, 110.0)?;
    let n = layer.node_count();

    println!("node   x (m)     y (m)");
    for (i, c) in layer.coords.iter().enumerate().take(10) {
        println!("{:4} {:8.1}  {:8.1}", grid.bus_ids[i], c[0], c[1]);
    }
    if n > 10 {
        println!("  ... {} more", n - 10);
    }

    // largest distance at which a link holds without shadowing
    let reach = params.d0 * 10f64.powf((params.lambda_c - params.bpl_d0) / (10.0 * params.gamma));
    println!("nominal radio range {reach:.1} m");

    let frac = |links: &[bool]| links.iter().filter(|&&b| b).count() as f64 / links.len() as f64;
    println!("feasible pairs, no shadowing: {:.3}", frac(&layer.feasible_links(&Shadowing::zero(n))));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..5 {
        let shadow = Shadowing::sample(n, params.sigma_shadow, &mut rng);
        println!("feasible pairs, shadowing draw {k}: {:.3}", frac(&layer.feasible_links(&shadow)));
    }
    Ok(())
}
