//! A fully specified placement problem: grid, cyber layer, training
//! scenarios and scoring configuration, with cached per-sensor detection
//! scores so candidate placements can be evaluated cheaply.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cyber::{CyberLayer, PathLossParams, Shadowing};
use crate::denoiser::GraphContext;
use crate::detect::{DetectionConfig, SensorScoreTable};
use crate::error::{Error, Result};
use crate::grid::{generate_scenarios, spread_anomaly_times, PowerGrid, ScenarioSet};
use crate::pairs::pairs;
use crate::placement::{check_constraints, refine_with_links, reward, PlacementGraph, RewardConfig};

/// How the training scenarios and the node layout are produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    /// Timesteps per scenario set.
    pub steps: usize,
    /// Number of single-branch outages.
    pub anomalies: usize,
    /// Multiplicative Gaussian load noise.
    pub load_noise_sigma: f64,
    /// Median pairwise node distance of the embedded layout (m).
    pub median_distance_m: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            steps: 400,
            anomalies: 20,
            load_noise_sigma: 0.005,
            median_distance_m: 110.0,
        }
    }
}

/// Score breakdown of one placement under one link-feasibility condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub refined: PlacementGraph,
    pub detection: f64,
    pub connectivity: f64,
    pub within_budget: bool,
    pub detects: bool,
    pub reward: f64,
}

impl Evaluation {
    pub fn feasible(&self) -> bool {
        self.within_budget && self.detects
    }
}

/// Reward statistics of one placement across several shadowing conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub mean_reward: f64,
    pub std_reward: f64,
    pub detection: f64,
    pub false_alarm_rate: f64,
    pub mean_connectivity: f64,
    pub feasible_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: PowerGrid,
    pub layer: CyberLayer,
    pub scenarios: ScenarioSet,
    pub detection: DetectionConfig,
    pub reward: RewardConfig,
    table: SensorScoreTable,
    nominal_links: Vec<bool>,
    context: Arc<GraphContext>,
}

impl Problem {
    pub fn new(
        grid: PowerGrid,
        layer: CyberLayer,
        scenarios: ScenarioSet,
        detection: DetectionConfig,
        reward: RewardConfig,
    ) -> Result<Self> {
        if layer.node_count() != grid.node_count() {
            return Err(Error::InvalidArgument("cyber layer and grid differ in node count".into()));
        }
        detection.validate()?;
        reward.validate()?;
        let table = SensorScoreTable::build(&scenarios, &detection, &grid)?;
        let nominal_links = layer.feasible_links(&Shadowing::zero(grid.node_count()));
        let context = Arc::new(build_context(&grid, &layer, &table, &nominal_links));
        Ok(Self {
            grid,
            layer,
            scenarios,
            detection,
            reward,
            table,
            nominal_links,
            context,
        })
    }

    /// Denoiser conditioning features for this instance.
    pub fn context(&self) -> &Arc<GraphContext> {
        &self.context
    }

    /// Builds the layout and a seeded training scenario set for `grid`.
    pub fn generate(
        grid: PowerGrid,
        params: &ScenarioParams,
        path_loss: PathLossParams,
        detection: DetectionConfig,
        reward: RewardConfig,
        seed: u64,
    ) -> Result<Self> {
        let layer = CyberLayer::from_grid(&grid, path_loss, params.median_distance_m)?;
        let times = spread_anomaly_times(
            params.steps,
            params.anomalies,
            detection.first_scorable_time(),
            seed ^ 0x5ce7_a110,
        )?;
        let scenarios = generate_scenarios(&grid, params.steps, &times, params.load_noise_sigma, seed)?;
        Self::new(grid, layer, scenarios, detection, reward)
    }

    pub fn node_count(&self) -> usize {
        self.grid.node_count()
    }

    pub fn score_table(&self) -> &SensorScoreTable {
        &self.table
    }

    pub fn detection_score(&self, nodes: &[usize]) -> f64 {
        self.table.detection_score(nodes)
    }

    /// Links feasible with zero shadowing, pair-indexed.
    pub fn nominal_links(&self) -> &[bool] {
        &self.nominal_links
    }

    /// Link feasibility under one fresh shadowing draw.
    pub fn sample_links<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        let shadow = Shadowing::sample(self.node_count(), self.layer.params.sigma_shadow, rng);
        self.layer.feasible_links(&shadow)
    }

    /// `count` seeded shadowing conditions.
    pub fn conditions(&self, count: usize, seed: u64) -> Vec<Vec<bool>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample_links(&mut rng)).collect()
    }

    /// Refines `raw` against `links` and scores it.
    pub fn evaluate(&self, raw: &PlacementGraph, links: &[bool]) -> Evaluation {
        let refined = refine_with_links(raw, links);
        let nodes = refined.selected();
        let detection = self.table.detection_score(&nodes);
        let (within_budget, detects) = check_constraints(&refined, detection, &self.reward);
        let connectivity = refined.connectivity();
        let reward = reward(&refined, detection, &self.reward);
        Evaluation {
            refined,
            detection,
            connectivity,
            within_budget,
            detects,
            reward,
        }
    }

    /// Mean and population standard deviation of the reward over conditions.
    pub fn evaluate_over(&self, raw: &PlacementGraph, conditions: &[Vec<bool>]) -> ConditionSummary {
        assert!(!conditions.is_empty(), "need at least one condition");
        let evals: Vec<Evaluation> = conditions.iter().map(|c| self.evaluate(raw, c)).collect();
        let k = evals.len() as f64;
        let mean = evals.iter().map(|e| e.reward).sum::<f64>() / k;
        let var = evals.iter().map(|e| (e.reward - mean).powi(2)).sum::<f64>() / k;
        let nodes = raw.selected();
        ConditionSummary {
            mean_reward: mean,
            std_reward: var.sqrt(),
            detection: self.table.detection_score(&nodes),
            false_alarm_rate: self.table.false_alarm_rate(&nodes),
            mean_connectivity: evals.iter().map(|e| e.connectivity).sum::<f64>() / k,
            feasible_fraction: evals.iter().filter(|e| e.feasible()).count() as f64 / k,
        }
    }
}

/// Node features: standalone detection score and grid degree over the
/// largest degree. Pair features: nominal link feasibility, path-loss
/// margin below the threshold in units of 10 dB (clamped to ±3), and
/// whether the pair is a grid branch.
fn build_context(grid: &PowerGrid, layer: &CyberLayer, table: &SensorScoreTable, nominal: &[bool]) -> GraphContext {
    let n = grid.node_count();
    let max_deg = (0..n).map(|i| grid.incident(i).len()).max().unwrap_or(1).max(1) as f64;
    let nodes = (0..n)
        .map(|i| [table.detection_score(&[i]), grid.incident(i).len() as f64 / max_deg])
        .collect();
    let edges = pairs(n)
        .zip(nominal)
        .map(|((i, j), &ok)| {
            let margin = match layer.path_loss(i, j, 0.0) {
                Ok(pl) => ((layer.params.lambda_c - pl) / 10.0).clamp(-3.0, 3.0),
                Err(_) => 3.0,
            };
            let branch = grid.incident(i).iter().any(|&e| grid.branches[e].touches(j));
            [ok as u8 as f64, margin, branch as u8 as f64]
        })
        .collect();
    GraphContext { nodes, edges }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use crate::grid::{load_bundled, parse_case};

    /// The 9-bus case with a short scenario set and a small budget.
    pub(crate) fn small_problem(seed: u64) -> Problem {
        let params = ScenarioParams {
            steps: 120,
            anomalies: 8,
            ..ScenarioParams::default()
        };
        let reward = RewardConfig {
            budget: 4,
            ..RewardConfig::default()
        };
        let grid = load_bundled("ieee9").unwrap();
        Problem::generate(grid, &params, PathLossParams::default(), DetectionConfig::default(), reward, seed).unwrap()
    }

    /// A ring of `n` buses whose nodes sit on a circle of radius `radius`
    /// metres, with link candidates restricted to `candidates` if given.
    pub(crate) fn ring_problem(n: usize, radius: f64, candidates: Option<&[(usize, usize)]>, budget: usize) -> Problem {
        let mut text = String::new();
        for i in 0..n {
            let inj = if i == 0 { 0.0 } else { -0.2 - 0.1 * i as f64 };
            text.push_str(&format!("BUS {} {inj} 0.05\n", i + 1));
        }
        text.push_str("SLACK 1\n");
        for i in 0..n {
            text.push_str(&format!("BRANCH {} {} 1.0 -{}\n", i + 1, (i + 1) % n + 1, 8.0 + i as f64));
        }
        let grid = parse_case(&text, "ring").unwrap();
        let coords = (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                [radius * a.cos(), radius * a.sin()]
            })
            .collect();
        let mut layer = CyberLayer::new(coords, PathLossParams::default()).unwrap();
        if let Some(c) = candidates {
            layer = layer.with_candidates(c).unwrap();
        }
        let detection = DetectionConfig::default();
        let times = spread_anomaly_times(150, 10, detection.first_scorable_time(), 3).unwrap();
        let scenarios = generate_scenarios(&grid, 150, &times, 0.01, 3).unwrap();
        let reward = RewardConfig {
            budget,
            ..RewardConfig::default()
        };
        Problem::new(grid, layer, scenarios, detection, reward).unwrap()
    }
}
