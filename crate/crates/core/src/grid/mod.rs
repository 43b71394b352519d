//! Physical layer: bus/branch cases, a linearized nodal circuit solve, and
//! labeled line-outage scenario generation.
//!
//! The network is modeled as a set of series admittances between buses. A
//! single slack bus is held at `1 + 0j`; every other bus injects a fixed
//! complex current. Line outages are represented by zeroing a branch
//! admittance for one timestep.

mod case;
mod scenario;
mod solve;

pub use case::{bundled_case, load_bundled, load_case, parse_case, BUNDLED_CASES};
pub use scenario::{generate_scenarios, spread_anomaly_times, ScenarioSet};
pub use solve::{kcl_residual, nodal_solve, nodal_solve_with, GridSnapshot};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A transmission branch between two buses. Current on the branch is
/// oriented from `from` to `to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    /// Series admittance in per-unit.
    pub admittance: Complex64,
}

impl Branch {
    /// The endpoint opposite to `node`, if `node` is an endpoint.
    pub fn other(&self, node: usize) -> Option<usize> {
        if node == self.from {
            Some(self.to)
        } else if node == self.to {
            Some(self.from)
        } else {
            None
        }
    }

    pub fn touches(&self, node: usize) -> bool {
        self.from == node || self.to == node
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerGrid {
    /// Original bus identifiers, indexed by dense node index.
    pub bus_ids: Vec<i64>,
    pub branches: Vec<Branch>,
    /// Per-node complex current injection (per-unit).
    pub injections: Vec<Complex64>,
    pub slack: usize,
    incident: Vec<Vec<usize>>,
}

impl PowerGrid {
    /// Builds a grid over nodes `0..injections.len()` and validates every
    /// structural invariant.
    pub fn new(
        bus_ids: Vec<i64>,
        branches: Vec<Branch>,
        injections: Vec<Complex64>,
        slack: usize,
    ) -> Result<Self> {
        let n = injections.len();
        if bus_ids.len() != n {
            return Err(Error::InvalidGrid(format!(
                "{} bus ids for {} injections",
                bus_ids.len(),
                n
            )));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("no buses".into()));
        }
        if slack >= n {
            return Err(Error::InvalidGrid(format!("slack node {slack} out of range")));
        }
        let mut seen = std::collections::HashSet::new();
        for (k, b) in branches.iter().enumerate() {
            if b.from >= n || b.to >= n {
                return Err(Error::InvalidGrid(format!("branch {k} references a missing node")));
            }
            if b.from == b.to {
                return Err(Error::InvalidGrid(format!("branch {k} is a self-loop")));
            }
            if !(b.admittance.norm() > 0.0) || !b.admittance.re.is_finite() || !b.admittance.im.is_finite() {
                return Err(Error::InvalidGrid(format!("branch {k} has non-positive admittance magnitude")));
            }
            let key = (b.from.min(b.to), b.from.max(b.to));
            if !seen.insert(key) {
                return Err(Error::InvalidGrid(format!(
                    "branch {k} duplicates the pair ({}, {})",
                    key.0, key.1
                )));
            }
        }
        let pairs: Vec<(usize, usize)> = branches.iter().map(|b| (b.from, b.to)).collect();
        if !is_connected(n, &pairs) {
            return Err(Error::InvalidGrid("grid is disconnected".into()));
        }
        let mut grid = PowerGrid {
            bus_ids,
            branches,
            injections,
            slack,
            incident: Vec::new(),
        };
        grid.rebuild_incidence();
        Ok(grid)
    }

    fn rebuild_incidence(&mut self) {
        let mut incident = vec![Vec::new(); self.injections.len()];
        for (k, b) in self.branches.iter().enumerate() {
            incident[b.from].push(k);
            incident[b.to].push(k);
        }
        self.incident = incident;
    }

    pub fn node_count(&self) -> usize {
        self.injections.len()
    }

    pub fn edge_count(&self) -> usize {
        self.branches.len()
    }

    /// Indices of branches adjacent to `node`.
    pub fn incident(&self, node: usize) -> &[usize] {
        &self.incident[node]
    }

    /// Branch indices whose individual outage leaves the grid connected.
    pub fn safe_outages(&self) -> Vec<usize> {
        let n = self.node_count();
        (0..self.branches.len())
            .filter(|&skip| {
                let pairs: Vec<_> = self
                    .branches
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, b)| (b.from, b.to))
                    .collect();
                is_connected(n, &pairs)
            })
            .collect()
    }
}

/// Union-find connectivity over an undirected edge list.
pub(crate) fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n <= 1 {
        return true;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components == 1
}
