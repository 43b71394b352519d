use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Classical multidimensional scaling into the plane.
///
/// Double-centers the squared distances, keeps the two largest eigenpairs
/// and scales each eigenvector by the square root of its eigenvalue.
/// Negative eigenvalues are clamped to zero.
pub fn mds_embed(distances: &[Vec<f64>]) -> Result<Vec<[f64; 2]>> {
    let n = distances.len();
    let scale = distances
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for (i, row) in distances.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidArgument(format!(
                "distance row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        for (j, &d) in row.iter().enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::InvalidArgument(format!("bad distance {d} at ({i}, {j})")));
            }
            if (d - distances[j][i]).abs() > 1e-9 * scale {
                return Err(Error::NonSymmetric(i, j));
            }
        }
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    let sq = DMatrix::from_fn(n, n, |i, j| distances[i][j] * distances[i][j]);
    let centering = DMatrix::<f64>::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let gram = -0.5 * &centering * sq * &centering;
    // symmetrize away rounding before the eigensolve
    let gram = 0.5 * (&gram + gram.transpose());
    let eig = SymmetricEigen::new(gram);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut coords = vec![[0.0; 2]; n];
    for (axis, &k) in order.iter().take(2).enumerate() {
        let s = eig.eigenvalues[k].max(0.0).sqrt();
        for (i, c) in coords.iter_mut().enumerate() {
            c[axis] = eig.eigenvectors[(i, k)] * s;
        }
    }
    Ok(coords)
}
