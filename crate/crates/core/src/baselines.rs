//! Reference placement strategies: greedy on detection accuracy, greedy on
//! algebraic connectivity, and uniform random.
//!
//! All three use link feasibility at zero shadowing and return refined
//! placements.

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::error::{Error, Result};
use crate::pairs::{pair_index, pairs};
use crate::placement::PlacementGraph;
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    GreedyAccuracy,
    GreedyRobustness,
    Random,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [Self::GreedyAccuracy, Self::GreedyRobustness, Self::Random];

    pub fn name(self) -> &'static str {
        match self {
            Self::GreedyAccuracy => "greedy-accuracy",
            Self::GreedyRobustness => "greedy-robustness",
            Self::Random => "random",
        }
    }
}

impl std::str::FromStr for Baseline {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownBaseline(s.to_string()))
    }
}

/// Selects `nodes` and activates every nominally feasible link among them.
fn fully_linked(problem: &Problem, nodes: &[usize]) -> PlacementGraph {
    let n = problem.node_count();
    let feasible = problem.nominal_links();
    let mut g = PlacementGraph::empty(n);
    for &v in nodes {
        g.select(v, true);
    }
    for (k, (i, j)) in pairs(n).enumerate() {
        if feasible[k] && g.is_selected(i) && g.is_selected(j) {
            g.set_link(i, j, true);
        }
    }
    g
}

/// Adds the node with the largest detection gain until `budget` nodes are
/// placed or no node improves the score, then links everything feasible.
pub fn greedy_accuracy(problem: &Problem, budget: usize) -> PlacementGraph {
    let n = problem.node_count();
    let mut chosen: Vec<usize> = Vec::new();
    let mut score = 0.0;
    while chosen.len() < budget.min(n) {
        let mut best: Option<(usize, f64)> = None;
        for v in (0..n).filter(|v| !chosen.contains(v)) {
            let mut trial = chosen.clone();
            trial.push(v);
            let s = problem.detection_score(&trial);
            if best.is_none_or(|(_, bs)| s > bs) {
                best = Some((v, s));
            }
        }
        let Some((v, s)) = best else { break };
        // the first sensor is always placed
        if !chosen.is_empty() && s <= score {
            break;
        }
        assert!(s >= score, "detection score decreased on adding a sensor");
        chosen.push(v);
        score = s;
    }
    fully_linked(problem, &chosen)
}

/// Starts from the feasible pair with the shortest link and repeatedly adds
/// the node whose feasible links to the current set give the largest
/// algebraic connectivity, until `budget` nodes. Ties go to the lower index.
pub fn greedy_robustness(problem: &Problem, budget: usize) -> Result<PlacementGraph> {
    let n = problem.node_count();
    let feasible = problem.nominal_links();
    let dist = &problem.layer.dist;
    let (a, b) = pairs(n)
        .zip(feasible)
        .filter(|(_, &ok)| ok)
        .map(|(p, _)| p)
        .min_by(|&(i, j), &(k, l)| dist[i][j].total_cmp(&dist[k][l]))
        .ok_or(Error::NoFeasibleLinks)?;
    let mut chosen = vec![a, b];
    if budget < 2 {
        chosen.truncate(budget.max(1));
        return Ok(fully_linked(problem, &chosen));
    }
    while chosen.len() < budget.min(n) {
        let mut best: Option<(usize, f64)> = None;
        for v in (0..n).filter(|v| !chosen.contains(v)) {
            let mut trial = chosen.clone();
            trial.push(v);
            let lambda = fully_linked(problem, &trial).connectivity();
            if best.is_none_or(|(_, bl)| lambda > bl) {
                best = Some((v, lambda));
            }
        }
        match best {
            Some((v, _)) => chosen.push(v),
            None => break,
        }
    }
    chosen.sort_unstable();
    Ok(fully_linked(problem, &chosen))
}

/// `budget` distinct nodes uniformly at random, each feasible link among
/// them switched on with probability one half.
pub fn random_placement<R: Rng + ?Sized>(problem: &Problem, budget: usize, rng: &mut R) -> PlacementGraph {
    let n = problem.node_count();
    let feasible = problem.nominal_links();
    let mut g = PlacementGraph::empty(n);
    for v in sample_indices(rng, n, budget.min(n)) {
        g.select(v, true);
    }
    for (i, j) in pairs(n) {
        if g.is_selected(i) && g.is_selected(j) && feasible[pair_index(n, i, j)] && rng.gen_bool(0.5) {
            g.set_link(i, j, true);
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for b in Baseline::ALL {
            assert_eq!(b.name().parse::<Baseline>().unwrap(), b);
        }
        assert!(matches!("nonsense".parse::<Baseline>(), Err(Error::UnknownBaseline(_))));
    }

    use crate::problem::testing::{ring_problem, small_problem};
    use crate::spectral::subgraph_connectivity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn respects_feasibility(problem: &Problem, g: &PlacementGraph) -> bool {
        let n = problem.node_count();
        g.is_refined() && g.links().iter().all(|&(i, j)| problem.nominal_links()[pair_index(n, i, j)])
    }

    #[test]
    fn greedy_accuracy_single_sensor_is_best_standalone() {
        let p = small_problem(4);
        let g = greedy_accuracy(&p, 1);
        let best = (0..p.node_count())
            .map(|v| p.detection_score(&[v]))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(g.selected_count(), 1);
        assert_eq!(p.detection_score(&g.selected()), best);
    }

    #[test]
    fn greedy_accuracy_unbounded_budget_reaches_full_coverage() {
        // detection is a union of per-sensor hits, so stopping at zero gain
        // means nothing more can be detected
        for seed in 0..4 {
            let p = small_problem(seed);
            let n = p.node_count();
            let g = greedy_accuracy(&p, n + 3);
            let all: Vec<usize> = (0..n).collect();
            assert_eq!(p.detection_score(&g.selected()), p.detection_score(&all));
            assert!(respects_feasibility(&p, &g));
        }
    }

    #[test]
    fn greedy_robustness_single_feasible_pair() {
        let p = ring_problem(5, 20.0, Some(&[(1, 3)]), 2);
        let g = greedy_robustness(&p, 2).unwrap();
        assert_eq!(g.selected(), vec![1, 3]);
        assert_eq!(g.links(), vec![(1, 3)]);
    }

    #[test]
    fn greedy_robustness_without_feasible_links_fails() {
        let p = ring_problem(4, 20.0, Some(&[]), 2);
        assert!(matches!(greedy_robustness(&p, 2), Err(Error::NoFeasibleLinks)));
        // nodes far beyond radio range
        let p = ring_problem(4, 5000.0, None, 2);
        assert!(matches!(greedy_robustness(&p, 2), Err(Error::NoFeasibleLinks)));
    }

    #[test]
    fn greedy_robustness_matches_exhaustive_optimum() {
        for n in 4..=6 {
            let p = ring_problem(n, 20.0, None, 4);
            let g = greedy_robustness(&p, 4).unwrap();
            let all_links: Vec<(usize, usize)> = pairs(n).collect();
            let mut best: f64 = 0.0;
            for mask in 0u32..1 << n {
                if mask.count_ones() != 4 {
                    continue;
                }
                let nodes: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
                best = best.max(subgraph_connectivity(&nodes, &all_links));
            }
            assert!((g.connectivity() - best).abs() < 1e-9, "n={n}: {} vs {best}", g.connectivity());
        }
    }

    #[test]
    fn greedy_robustness_on_partial_feasibility() {
        let links = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 2), (1, 3)];
        let p = ring_problem(6, 20.0, Some(&links), 4);
        let g = greedy_robustness(&p, 4).unwrap();
        assert_eq!(g.selected_count(), 4);
        assert!(respects_feasibility(&p, &g));
        assert!(g.connectivity() > 0.0);
    }

    #[test]
    fn random_placement_is_seeded() {
        let p = small_problem(1);
        let a = random_placement(&p, 4, &mut ChaCha8Rng::seed_from_u64(9));
        let b = random_placement(&p, 4, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert_eq!(a.selected_count(), 4);
        assert!(respects_feasibility(&p, &a));
        let full = random_placement(&p, p.node_count(), &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(full.selected(), (0..p.node_count()).collect::<Vec<_>>());
    }

    #[test]
    fn random_placement_selects_nodes_uniformly() {
        let p = small_problem(1);
        let (n, budget, draws) = (p.node_count(), 4, 1000);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut counts = vec![0usize; n];
        for _ in 0..draws {
            for v in random_placement(&p, budget, &mut rng).selected() {
                counts[v] += 1;
            }
        }
        let q = budget as f64 / n as f64;
        let sigma = (draws as f64 * q * (1.0 - q)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * q).abs() <= 3.0 * sigma, "count {c}");
        }
    }
}
