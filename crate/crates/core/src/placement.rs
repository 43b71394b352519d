//! Sensor placement graphs, refinement onto the feasible set, and the
//! penalty-constrained reward.

use serde::{Deserialize, Serialize};

use crate::cyber::{CyberLayer, Shadowing};
use crate::error::{Error, Result};
use crate::pairs::{pair_count, pair_index, pairs};
use crate::spectral::subgraph_connectivity;

/// Selected nodes plus active links. Links are stored once per unordered
/// pair, so the adjacency is symmetric with an empty diagonal by
/// construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlacementGraph {
    node_sel: Vec<bool>,
    links: Vec<bool>,
}

impl PlacementGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            node_sel: vec![false; n],
            links: vec![false; pair_count(n)],
        }
    }

    /// From a node mask and pair-indexed link mask.
    pub fn from_parts(node_sel: Vec<bool>, links: Vec<bool>) -> Result<Self> {
        if links.len() != pair_count(node_sel.len()) {
            return Err(Error::InvalidArgument(format!(
                "{} links for {} nodes",
                links.len(),
                node_sel.len()
            )));
        }
        Ok(Self { node_sel, links })
    }

    /// From a node mask and a full, possibly asymmetric, adjacency matrix.
    /// The matrix is symmetrized by logical OR and its diagonal ignored.
    pub fn from_matrix(node_sel: Vec<bool>, adj: &[Vec<bool>]) -> Result<Self> {
        let n = node_sel.len();
        if adj.len() != n || adj.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("adjacency shape mismatch".into()));
        }
        let links = pairs(n).map(|(i, j)| adj[i][j] || adj[j][i]).collect();
        Ok(Self { node_sel, links })
    }

    pub fn node_count(&self) -> usize {
        self.node_sel.len()
    }

    pub fn node_mask(&self) -> &[bool] {
        &self.node_sel
    }

    pub fn link_mask(&self) -> &[bool] {
        &self.links
    }

    pub fn is_selected(&self, i: usize) -> bool {
        self.node_sel[i]
    }

    pub fn select(&mut self, i: usize, on: bool) {
        self.node_sel[i] = on;
    }

    pub fn has_link(&self, i: usize, j: usize) -> bool {
        i != j && self.links[pair_index(self.node_count(), i, j)]
    }

    pub fn set_link(&mut self, i: usize, j: usize, on: bool) {
        let k = pair_index(self.node_count(), i, j);
        self.links[k] = on;
    }

    pub fn selected(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| self.node_sel[i]).collect()
    }

    pub fn selected_count(&self) -> usize {
        self.node_sel.iter().filter(|&&b| b).count()
    }

    pub fn links(&self) -> Vec<(usize, usize)> {
        pairs(self.node_count())
            .zip(&self.links)
            .filter(|(_, &on)| on)
            .map(|(p, _)| p)
            .collect()
    }

    /// Full symmetric adjacency matrix.
    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        let n = self.node_count();
        let mut m = vec![vec![false; n]; n];
        for (i, j) in self.links() {
            m[i][j] = true;
            m[j][i] = true;
        }
        m
    }

    /// Links only join selected nodes.
    pub fn is_refined(&self) -> bool {
        self.links().iter().all(|&(i, j)| self.node_sel[i] && self.node_sel[j])
    }

    /// Node mask followed by the upper-triangular link mask, as 0/1.
    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        self.node_sel.iter().chain(&self.links).map(|&b| b as u8)
    }

    /// Mean squared difference of the concatenated 0/1 encodings.
    pub fn mse(&self, other: &PlacementGraph) -> f64 {
        assert_eq!(self.node_count(), other.node_count());
        let len = self.node_sel.len() + self.links.len();
        let diff = self.bits().zip(other.bits()).filter(|(a, b)| a != b).count();
        diff as f64 / len as f64
    }

    /// Unnormalized algebraic connectivity of the selected subgraph.
    pub fn connectivity(&self) -> f64 {
        subgraph_connectivity(&self.selected(), &self.links())
    }

    pub fn to_record(&self) -> PlacementRecord {
        PlacementRecord {
            nodes: self.selected(),
            edges: self.links().into_iter().map(|(i, j)| [i, j]).collect(),
        }
    }

    pub fn from_record(n: usize, rec: &PlacementRecord) -> Result<Self> {
        let mut g = Self::empty(n);
        for &v in &rec.nodes {
            if v >= n {
                return Err(Error::InvalidArgument(format!("node {v} out of range")));
            }
            g.node_sel[v] = true;
        }
        for &[i, j] in &rec.edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidArgument(format!("bad edge [{i}, {j}]")));
            }
            g.set_link(i, j, true);
        }
        Ok(g)
    }
}

/// JSON form of a placement: `{"nodes": [ids], "edges": [[i, j], …]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementRecord {
    pub nodes: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
}

/// Projects a raw graph onto the feasible set: links touching unselected
/// nodes and links whose path loss exceeds the threshold under the given
/// shadowing are dropped.
pub fn refine(raw: &PlacementGraph, layer: &CyberLayer, shadowing: &Shadowing) -> PlacementGraph {
    refine_with_links(raw, &layer.feasible_links(shadowing))
}

/// [`refine`] against a precomputed pair-indexed feasibility mask.
pub fn refine_with_links(raw: &PlacementGraph, feasible: &[bool]) -> PlacementGraph {
    let n = raw.node_count();
    assert_eq!(feasible.len(), pair_count(n));
    let links = pairs(n)
        .zip(raw.links.iter().zip(feasible))
        .map(|((i, j), (&on, &ok))| on && ok && raw.node_sel[i] && raw.node_sel[j])
        .collect();
    PlacementGraph {
        node_sel: raw.node_sel.clone(),
        links,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    /// Sensor budget.
    pub budget: usize,
    /// Minimum detection score.
    pub lambda_s: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            r1: 5000.0,
            r2: 1.075,
            r3: 0.5,
            budget: 25,
            lambda_s: 0.90,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.r1 > 0.0
            && self.r2 > 0.0
            && self.r3 > 0.0
            && self.budget > 0
            && self.lambda_s > 0.0
            && self.lambda_s <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid reward config {self:?}")))
        }
    }
}

/// `(within budget, detection score meets threshold)`.
pub fn check_constraints(p: &PlacementGraph, detection: f64, cfg: &RewardConfig) -> (bool, bool) {
    (p.selected_count() <= cfg.budget, detection >= cfg.lambda_s)
}

/// Reward of a refined placement with detection score `detection`.
///
/// Feasible placements earn `r1 · λ2`; anything else pays
/// `-r2 (|V| - N) - r3 (λs - S_a)`.
pub fn reward(p: &PlacementGraph, detection: f64, cfg: &RewardConfig) -> f64 {
    debug_assert!(p.is_refined());
    match check_constraints(p, detection, cfg) {
        (true, true) => cfg.r1 * p.connectivity(),
        _ => {
            -cfg.r2 * (p.selected_count() as f64 - cfg.budget as f64) - cfg.r3 * (cfg.lambda_s - detection)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, nodes: &[usize], edges: &[(usize, usize)]) -> PlacementGraph {
        let mut g = PlacementGraph::empty(n);
        for &v in nodes {
            g.select(v, true);
        }
        for &(i, j) in edges {
            g.set_link(i, j, true);
        }
        g
    }

    #[test]
    fn refine_drops_unselected_and_infeasible() {
        let raw = graph(4, &[0, 1, 2], &[(0, 1), (1, 3), (0, 2)]);
        let mut feasible = vec![true; pair_count(4)];
        feasible[pair_index(4, 0, 2)] = false;
        let r = refine_with_links(&raw, &feasible);
        assert_eq!(r.links(), vec![(0, 1)]);
        assert!(r.is_refined());
        assert_eq!(refine_with_links(&r, &feasible), r);
    }

    #[test]
    fn refine_uses_path_loss() {
        use crate::cyber::PathLossParams;
        let p = PathLossParams::default();
        let at = |loss: f64| 10f64.powf((loss - p.bpl_d0) / (10.0 * p.gamma));
        let layer = CyberLayer::new(vec![[0.0, 0.0], [at(80.0), 0.0], [0.0, at(60.0)]], p).unwrap();
        let raw = graph(3, &[0, 1, 2], &[(0, 1), (0, 2)]);
        let r = refine(&raw, &layer, &Shadowing::zero(3));
        assert_eq!(r.links(), vec![(0, 2)]);
    }

    #[test]
    fn matrix_is_or_symmetrized() {
        let adj = vec![vec![true, true, false], vec![false, false, false], vec![false, true, false]];
        let g = PlacementGraph::from_matrix(vec![true; 3], &adj).unwrap();
        assert_eq!(g.links(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn constraint_examples() {
        let cfg = RewardConfig::default();
        let g25 = graph(40, &(0..25).collect::<Vec<_>>(), &[]);
        assert_eq!(check_constraints(&g25, 0.95, &cfg), (true, true));
        let g30 = graph(40, &(0..30).collect::<Vec<_>>(), &[]);
        assert!(!check_constraints(&g30, 0.95, &cfg).0);
        assert!(!check_constraints(&g25, 0.80, &cfg).1);
    }

    #[test]
    fn penalty_branch_formula() {
        let cfg = RewardConfig::default();
        let g30 = graph(40, &(0..30).collect::<Vec<_>>(), &[]);
        assert!((reward(&g30, 0.80, &cfg) - (-5.425)).abs() < 1e-12);
    }

    #[test]
    fn feasible_reward_scales_connectivity() {
        let cfg = RewardConfig::default();
        // path on two nodes: λ2 = 2
        let g = graph(3, &[0, 1], &[(0, 1)]);
        assert!((reward(&g, 1.0, &cfg) - 10000.0).abs() < 1e-9);
        // disconnected but feasible
        let g = graph(3, &[0, 1, 2], &[(0, 1)]);
        assert_eq!(reward(&g, 1.0, &cfg), 0.0);
        // single node
        let g = graph(3, &[1], &[]);
        assert_eq!(reward(&g, 1.0, &cfg), 0.0);
    }

    #[test]
    fn record_round_trip() {
        let g = graph(6, &[0, 2, 5], &[(0, 2), (2, 5)]);
        let rec = g.to_record();
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(json, r#"{"nodes":[0,2,5],"edges":[[0,2],[2,5]]}"#);
        let back: PlacementRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(PlacementGraph::from_record(6, &back).unwrap(), g);
    }

    #[test]
    fn mse_counts_bits() {
        let a = graph(3, &[0, 1], &[(0, 1)]);
        let b = graph(3, &[0], &[]);
        assert!((a.mse(&b) - 2.0 / 6.0).abs() < 1e-15);
    }
}
