use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::mds_embed;
use crate::error::{Error, Result};
use crate::grid::PowerGrid;
use crate::pairs::{pair_count, pair_index, pairs};

/// Log-normal shadowing path-loss model and link budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossParams {
    /// Reference distance (m).
    pub d0: f64,
    /// Path loss at the reference distance (dB).
    pub bpl_d0: f64,
    /// Path-loss exponent.
    pub gamma: f64,
    /// Shadowing standard deviation (dB).
    pub sigma_shadow: f64,
    /// Transmit power (dBm).
    pub pt_dbm: f64,
    /// Noise power (dBm).
    pub pn_dbm: f64,
    /// Largest admissible path loss for an active link (dB).
    pub lambda_c: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        // IEEE 802.15.4 substation channel
        Self {
            d0: 1.0,
            bpl_d0: 40.3308,
            gamma: 1.701,
            sigma_shadow: 2.18,
            pt_dbm: 10.0,
            pn_dbm: -90.0,
            lambda_c: 75.0,
        }
    }
}

impl PathLossParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.d0 > 0.0
            && self.gamma > 0.0
            && self.sigma_shadow >= 0.0
            && [self.bpl_d0, self.pt_dbm, self.pn_dbm, self.lambda_c]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid path-loss parameters {self:?}")))
        }
    }

    /// Path loss in dB at distance `d` (> 0) with a given shadowing draw.
    pub fn loss_at(&self, d: f64, shadowing: f64) -> f64 {
        self.bpl_d0 + 10.0 * self.gamma * (d / self.d0).log10() + shadowing
    }

    /// SNR in dB for a given path loss.
    pub fn snr_for_loss(&self, loss: f64) -> f64 {
        self.pt_dbm - loss - self.pn_dbm
    }
}

/// One realization of the per-link shadowing term, indexed by unordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Shadowing {
    n: usize,
    values: Vec<f64>,
}

impl Shadowing {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; pair_count(n)],
        }
    }

    pub fn sample<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> Self {
        let values = if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
            (0..pair_count(n)).map(|_| normal.sample(rng)).collect()
        } else {
            vec![0.0; pair_count(n)]
        };
        Self { n, values }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[pair_index(self.n, i, j)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CyberLayer {
    pub coords: Vec<[f64; 2]>,
    /// Symmetric pairwise distance matrix (m).
    pub dist: Vec<Vec<f64>>,
    pub params: PathLossParams,
    /// Candidate link set, pair-indexed.
    candidates: Vec<bool>,
}

impl CyberLayer {
    /// Layer over the given coordinates with every pair as a candidate link.
    pub fn new(coords: Vec<[f64; 2]>, params: PathLossParams) -> Result<Self> {
        params.validate()?;
        let n = coords.len();
        let dist = coords
            .iter()
            .map(|a| {
                coords
                    .iter()
                    .map(|b| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
                    .collect()
            })
            .collect();
        Ok(Self {
            coords,
            dist,
            params,
            candidates: vec![true; pair_count(n)],
        })
    }

    /// Restricts the candidate link set to `links`.
    pub fn with_candidates(mut self, links: &[(usize, usize)]) -> Result<Self> {
        let n = self.node_count();
        let mut candidates = vec![false; pair_count(n)];
        for &(i, j) in links {
            if i == j || i >= n || j >= n {
                return Err(Error::InvalidArgument(format!("bad candidate link ({i}, {j})")));
            }
            candidates[pair_index(n, i, j)] = true;
        }
        self.candidates = candidates;
        Ok(self)
    }

    /// Embeds a grid in the plane. Each branch is given length `|1/y|`,
    /// all-pairs shortest paths complete the distance matrix, classical MDS
    /// places the nodes, and the layout is scaled so the median pairwise
    /// distance equals `median_distance_m`.
    pub fn from_grid(grid: &PowerGrid, params: PathLossParams, median_distance_m: f64) -> Result<Self> {
        if !(median_distance_m > 0.0) {
            return Err(Error::InvalidArgument("median distance must be positive".into()));
        }
        let n = grid.node_count();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for b in &grid.branches {
            let len = 1.0 / b.admittance.norm();
            let cur = d[b.from][b.to];
            d[b.from][b.to] = cur.min(len);
            d[b.to][b.from] = cur.min(len);
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        let coords = mds_embed(&d)?;
        let mut layer = Self::new(coords, params)?;
        let mut all: Vec<f64> = pairs(n).map(|(i, j)| layer.dist[i][j]).collect();
        if all.is_empty() {
            return Ok(layer);
        }
        all.sort_by(f64::total_cmp);
        let median = all[all.len() / 2];
        if median > 0.0 {
            let s = median_distance_m / median;
            for c in &mut layer.coords {
                c[0] *= s;
                c[1] *= s;
            }
            for row in &mut layer.dist {
                for v in row.iter_mut() {
                    *v *= s;
                }
            }
        }
        Ok(layer)
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn is_candidate(&self, i: usize, j: usize) -> bool {
        i != j && self.candidates[pair_index(self.node_count(), i, j)]
    }

    pub fn path_loss(&self, i: usize, j: usize, shadowing: f64) -> Result<f64> {
        let d = self.dist[i][j];
        if i == j || d <= 0.0 {
            return Err(Error::CoincidentNodes(i, j));
        }
        Ok(self.params.loss_at(d, shadowing))
    }

    pub fn snr(&self, i: usize, j: usize, shadowing: f64) -> Result<f64> {
        Ok(self.params.snr_for_loss(self.path_loss(i, j, shadowing)?))
    }

    /// Whether the link `{i, j}` is active under the given shadowing.
    /// Distinct co-located nodes count as in range.
    pub fn link_state(&self, i: usize, j: usize, shadowing: f64) -> bool {
        if !self.is_candidate(i, j) {
            return false;
        }
        match self.path_loss(i, j, shadowing) {
            Ok(pl) => pl <= self.params.lambda_c,
            Err(_) => true,
        }
    }

    /// Pair-indexed link states under one shadowing realization.
    pub fn feasible_links(&self, shadowing: &Shadowing) -> Vec<bool> {
        pairs(self.node_count())
            .map(|(i, j)| self.link_state(i, j, shadowing.get(i, j)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(ds: &[f64]) -> CyberLayer {
        let coords = ds.iter().map(|&x| [x, 0.0]).collect();
        CyberLayer::new(coords, PathLossParams::default()).unwrap()
    }

    #[test]
    fn reference_values() {
        let l = line(&[0.0, 1.0, 10.0]);
        assert_eq!(l.path_loss(0, 1, 0.0).unwrap(), 40.3308);
        assert!((l.path_loss(0, 2, 0.0).unwrap() - 57.3408).abs() < 1e-9);
        assert!((l.path_loss(0, 2, 2.18).unwrap() - 59.5208).abs() < 1e-9);
        assert!((l.snr(0, 1, 0.0).unwrap() - 59.6692).abs() < 1e-9);
    }

    #[test]
    fn snr_arithmetic() {
        let p = PathLossParams::default();
        assert_eq!(p.snr_for_loss(75.0), 25.0);
        assert_eq!(p.snr_for_loss(100.0), 0.0);
    }

    #[test]
    fn link_threshold_and_candidates() {
        let p = PathLossParams::default();
        // distances giving losses of exactly 74.9 and 75.1 dB
        let at = |loss: f64| p.d0 * 10f64.powf((loss - p.bpl_d0) / (10.0 * p.gamma));
        let l = line(&[0.0, at(74.9), -at(75.1)]);
        assert!(l.link_state(0, 1, 0.0));
        assert!(l.link_state(1, 0, 0.0));
        assert!(!l.link_state(0, 2, 0.0));
        let restricted = line(&[0.0, 0.5, 1.0]).with_candidates(&[(0, 1)]).unwrap();
        assert!(restricted.link_state(0, 1, 0.0));
        assert!(!restricted.link_state(1, 2, -30.0));
    }

    #[test]
    fn coincident_nodes_rejected() {
        let l = line(&[0.0, 0.0]);
        assert!(matches!(l.path_loss(0, 1, 0.0), Err(Error::CoincidentNodes(0, 1))));
    }

    #[test]
    fn grid_layout_median() {
        let g = crate::grid::load_bundled("ieee14").unwrap();
        let l = CyberLayer::from_grid(&g, PathLossParams::default(), 100.0).unwrap();
        let mut ds: Vec<f64> = pairs(14).map(|(i, j)| l.dist[i][j]).collect();
        ds.sort_by(f64::total_cmp);
        assert!((ds[ds.len() / 2] - 100.0).abs() < 1e-9);
        for i in 0..14 {
            assert_eq!(l.dist[i][i], 0.0);
            for j in 0..14 {
                assert_eq!(l.dist[i][j], l.dist[j][i]);
            }
        }
    }
}
