//! Algebraic connectivity and the Cheeger constant of a few small graphs.

use sensorplace::spectral::GraphMatrixBundle;

fn main() -> sensorplace::Result<()> {
    let path: Vec<(usize, usize)> = (0..5).map(|i| (i, i + 1)).collect();
    let mut cycle = path.clone();
    cycle.push((5, 0));
    let star: Vec<(usize, usize)> = (1..6).map(|i| (0, i)).collect();
    let complete: Vec<(usize, usize)> = (0..6).flat_map(|i| (i + 1..6).map(move |j| (i, j))).collect();
    let barbell = vec![(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)];

    println!("{:10} {:>8} {:>8} {:>8} {:>18}", "graph", "λ2", "λ2 norm", "h", "Cheeger bounds");
    for (name, edges) in [("path", path), ("cycle", cycle), ("star", star), ("complete", complete), ("barbell", barbell)] {
        let g = GraphMatrixBundle::from_edges(6, &edges)?;
        let (lo, hi) = g.cheeger_bounds()?;
        println!(
            "{name:10} {:8.4} {:8.4} {:8.4}   [{lo:.4}, {hi:.4}]",
            g.fiedler_value(false)?,
            g.fiedler_value(true)?,
            g.cheeger_bruteforce()?
        );
    }
    Ok(())
}
