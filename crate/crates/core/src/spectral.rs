//! Graph Laplacians, algebraic connectivity and the Cheeger constant.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::is_connected;

/// Largest node count accepted by [`GraphMatrixBundle::cheeger_bruteforce`].
pub const CHEEGER_EXACT_LIMIT: usize = 16;

/// Adjacency, degree and Laplacian matrices of a simple undirected graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMatrixBundle {
    pub adjacency: DMatrix<f64>,
    pub degree: Vec<f64>,
    /// `L = D - A`
    pub laplacian: DMatrix<f64>,
    /// `D^{-1/2} L D^{-1/2}`, with `D^{-1/2}` taken as 0 at isolated nodes.
    pub normalized_laplacian: DMatrix<f64>,
}

impl GraphMatrixBundle {
    /// Builds the bundle from a symmetric 0/1 adjacency with zero diagonal.
    pub fn new(adjacency: DMatrix<f64>) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n {
            return Err(Error::InvalidArgument("adjacency must be square".into()));
        }
        for i in 0..n {
            for j in 0..n {
                let a = adjacency[(i, j)];
                if a != 0.0 && a != 1.0 || (i == j && a != 0.0) {
                    return Err(Error::NonBinary(i, j));
                }
                if a != adjacency[(j, i)] {
                    return Err(Error::NonSymmetric(i, j));
                }
            }
        }
        let degree: Vec<f64> = (0..n).map(|i| adjacency.row(i).sum()).collect();
        let laplacian = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(degree.clone())) - &adjacency;
        let inv_sqrt: Vec<f64> = degree
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
            .collect();
        let normalized_laplacian =
            DMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * laplacian[(i, j)] * inv_sqrt[j]);
        Ok(Self {
            adjacency,
            degree,
            laplacian,
            normalized_laplacian,
        })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut a = DMatrix::zeros(n, n);
        for &(i, j) in edges {
            if i == j {
                return Err(Error::NonBinary(i, j));
            }
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        Self::new(a)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.nrows()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.node_count();
        crate::pairs::pairs(n)
            .filter(|&(i, j)| self.adjacency[(i, j)] != 0.0)
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        is_connected(self.node_count(), &self.edges())
    }

    /// Second-smallest eigenvalue of the unnormalized or normalized Laplacian.
    /// Disconnected graphs return exactly 0.
    pub fn fiedler_value(&self, normalized: bool) -> Result<f64> {
        let n = self.node_count();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("fiedler value needs n >= 2, got {n}")));
        }
        if !self.is_connected() {
            return Ok(0.0);
        }
        let m = if normalized {
            &self.normalized_laplacian
        } else {
            &self.laplacian
        };
        Ok(second_smallest_eigenvalue(m.clone()).max(0.0))
    }

    /// Exact Cheeger constant by enumerating every bipartition.
    pub fn cheeger_bruteforce(&self) -> Result<f64> {
        let n = self.node_count();
        if n > CHEEGER_EXACT_LIMIT {
            return Err(Error::TooLargeForCheeger(n));
        }
        let edges = self.edges();
        if edges.is_empty() {
            return Err(Error::InvalidArgument("Cheeger constant needs at least one edge".into()));
        }
        let total: f64 = self.degree.iter().sum();
        let mut best = f64::INFINITY;
        // node n-1 is kept outside Y; the complement covers the other half
        for mask in 1u32..(1u32 << (n - 1)) {
            let inside = |v: usize| mask >> v & 1 == 1;
            let vol: f64 = (0..n - 1).filter(|&v| inside(v)).map(|v| self.degree[v]).sum();
            let smaller = vol.min(total - vol);
            if smaller <= 0.0 {
                continue;
            }
            let cut = edges.iter().filter(|&&(a, b)| inside(a) != inside(b)).count() as f64;
            best = best.min(cut / smaller);
        }
        if best.is_infinite() {
            return Err(Error::InvalidArgument("no bipartition with positive volume".into()));
        }
        Ok(best)
    }

    /// `(λ2/2, sqrt(2 λ2))` of the normalized Laplacian.
    pub fn cheeger_bounds(&self) -> Result<(f64, f64)> {
        let l2 = self.fiedler_value(true)?;
        Ok((l2 / 2.0, (2.0 * l2).sqrt()))
    }
}

fn second_smallest_eigenvalue(m: DMatrix<f64>) -> f64 {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev[1]
}

/// Unnormalized algebraic connectivity of the subgraph induced on `nodes`
/// by `edges` (given in original node labels). Fewer than two nodes or a
/// disconnected subgraph yields 0.
pub fn subgraph_connectivity(nodes: &[usize], edges: &[(usize, usize)]) -> f64 {
    let k = nodes.len();
    if k < 2 {
        return 0.0;
    }
    let pos = |v: usize| nodes.iter().position(|&u| u == v);
    let local: Vec<(usize, usize)> = edges
        .iter()
        .filter_map(|&(a, b)| Some((pos(a)?, pos(b)?)))
        .collect();
    if !is_connected(k, &local) {
        return 0.0;
    }
    let mut l = DMatrix::<f64>::zeros(k, k);
    for &(a, b) in &local {
        l[(a, a)] += 1.0;
        l[(b, b)] += 1.0;
        l[(a, b)] -= 1.0;
        l[(b, a)] -= 1.0;
    }
    second_smallest_eigenvalue(l).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> GraphMatrixBundle {
        GraphMatrixBundle::from_edges(n, &crate::pairs::pairs(n).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn k3_bundle() {
        let b = complete(3);
        assert_eq!(b.degree, vec![2.0; 3]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(b.laplacian[(i, j)], if i == j { 2.0 } else { -1.0 });
            }
        }
    }

    #[test]
    fn empty_and_path() {
        let e = GraphMatrixBundle::from_edges(3, &[]).unwrap();
        assert!(e.laplacian.iter().all(|&v| v == 0.0));
        let p3 = GraphMatrixBundle::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(p3.degree, vec![1.0, 2.0, 1.0]);
        assert!((p3.fiedler_value(false).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_fiedler() {
        assert!((complete(4).fiedler_value(false).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_is_zero() {
        let b = GraphMatrixBundle::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(b.fiedler_value(false).unwrap(), 0.0);
        assert_eq!(b.cheeger_bruteforce().unwrap(), 0.0);
        assert_eq!(b.cheeger_bounds().unwrap(), (0.0, 0.0));
    }

    #[test]
    fn cheeger_small_cases() {
        let k2 = complete(2);
        assert_eq!(k2.cheeger_bruteforce().unwrap(), 1.0);
        let (lo, hi) = k2.cheeger_bounds().unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);

        let c4 = GraphMatrixBundle::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(c4.cheeger_bruteforce().unwrap(), 0.5);
        let (lo, hi) = c4.cheeger_bounds().unwrap();
        assert!(lo <= 0.5 && 0.5 <= hi);
    }

    #[test]
    fn rejects_bad_input() {
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = 1.0;
        assert!(matches!(GraphMatrixBundle::new(a.clone()), Err(Error::NonSymmetric(..))));
        a[(1, 0)] = 2.0;
        a[(0, 1)] = 2.0;
        assert!(matches!(GraphMatrixBundle::new(a), Err(Error::NonBinary(..))));
        assert!(complete(1).fiedler_value(false).is_err());
        assert!(matches!(complete(17).cheeger_bruteforce(), Err(Error::TooLargeForCheeger(17))));
    }

    #[test]
    fn subgraph_matches_bundle() {
        let edges = [(1, 3), (3, 5), (5, 1), (5, 7), (0, 2)];
        let nodes = [1, 3, 5, 7];
        let local = GraphMatrixBundle::from_edges(4, &[(0, 1), (1, 2), (2, 0), (2, 3)]).unwrap();
        let want = local.fiedler_value(false).unwrap();
        assert!((subgraph_connectivity(&nodes, &edges) - want).abs() < 1e-12);
        assert_eq!(subgraph_connectivity(&[1], &edges), 0.0);
        assert_eq!(subgraph_connectivity(&[0, 1, 2], &edges), 0.0);
    }
}
