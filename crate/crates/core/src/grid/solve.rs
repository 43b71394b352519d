use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{is_connected, PowerGrid};
use crate::error::{Error, Result};

/// Reference voltage held at the slack bus.
pub const SLACK_VOLTAGE: Complex64 = Complex64::new(1.0, 0.0);

/// One solved operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSnapshot {
    pub t: usize,
    pub node_voltage: Vec<Complex64>,
    /// Current on each branch, oriented `from -> to`.
    pub edge_current: Vec<Complex64>,
    /// Injections used for this solve (after load noise).
    pub injection: Vec<Complex64>,
    /// Index of the branch opened at this timestep, if any.
    pub anomaly_label: Option<usize>,
}

impl GridSnapshot {
    /// Current on branch `edge` oriented away from `node`.
    pub fn current_from(&self, grid: &PowerGrid, edge: usize, node: usize) -> Complex64 {
        let b = &grid.branches[edge];
        if b.from == node {
            self.edge_current[edge]
        } else {
            -self.edge_current[edge]
        }
    }
}

/// Solves the grid with its own admittances and injections.
pub fn nodal_solve(grid: &PowerGrid) -> Result<GridSnapshot> {
    let admittances: Vec<Complex64> = grid.branches.iter().map(|b| b.admittance).collect();
    nodal_solve_with(grid, &admittances, &grid.injections)
}

/// Solves `Y V = I` with the slack bus fixed at `1 + 0j`, using the given
/// per-branch admittances (zero means open) and injections.
pub fn nodal_solve_with(
    grid: &PowerGrid,
    admittances: &[Complex64],
    injections: &[Complex64],
) -> Result<GridSnapshot> {
    let n = grid.node_count();
    assert_eq!(admittances.len(), grid.edge_count());
    assert_eq!(injections.len(), n);

    let live: Vec<(usize, usize)> = grid
        .branches
        .iter()
        .zip(admittances)
        .filter(|(_, y)| y.norm() > 0.0)
        .map(|(b, _)| (b.from, b.to))
        .collect();
    if !is_connected(n, &live) {
        return Err(Error::IslandedGrid);
    }

    let slack = grid.slack;
    // dense position of each non-slack node in the reduced system
    let reduced: Vec<Option<usize>> = (0..n)
        .scan(0usize, |next, i| {
            Some(if i == slack {
                None
            } else {
                *next += 1;
                Some(*next - 1)
            })
        })
        .collect();
    let m = n - 1;
    let mut voltage = vec![SLACK_VOLTAGE; n];

    if m > 0 {
        let mut y = DMatrix::<Complex64>::zeros(m, m);
        let mut rhs = DVector::<Complex64>::from_iterator(
            m,
            (0..n).filter(|&i| i != slack).map(|i| injections[i]),
        );
        for (b, &adm) in grid.branches.iter().zip(admittances) {
            match (reduced[b.from], reduced[b.to]) {
                (Some(p), Some(q)) => {
                    y[(p, p)] += adm;
                    y[(q, q)] += adm;
                    y[(p, q)] -= adm;
                    y[(q, p)] -= adm;
                }
                (Some(p), None) | (None, Some(p)) => {
                    y[(p, p)] += adm;
                    rhs[p] += adm * SLACK_VOLTAGE;
                }
                (None, None) => unreachable!("self-loop at slack"),
            }
        }
        let solved = y.lu().solve(&rhs).ok_or(Error::IslandedGrid)?;
        for i in 0..n {
            if let Some(p) = reduced[i] {
                voltage[i] = solved[p];
            }
        }
    }

    let edge_current = grid
        .branches
        .iter()
        .zip(admittances)
        .map(|(b, &adm)| adm * (voltage[b.from] - voltage[b.to]))
        .collect();

    Ok(GridSnapshot {
        t: 0,
        node_voltage: voltage,
        edge_current,
        injection: injections.to_vec(),
        anomaly_label: None,
    })
}

/// Largest Kirchhoff current-law mismatch over non-slack nodes.
pub fn kcl_residual(grid: &PowerGrid, snap: &GridSnapshot) -> f64 {
    (0..grid.node_count())
        .filter(|&i| i != grid.slack)
        .map(|i| {
            let out: Complex64 = grid
                .incident(i)
                .iter()
                .map(|&e| snap.current_from(grid, e, i))
                .sum();
            (snap.injection[i] - out).norm()
        })
        .fold(0.0, f64::max)
}
