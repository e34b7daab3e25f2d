//! One-sided Jacobi SVD, the dense oracle for singular spectra.
//!
//! The method right-rotates column pairs until all columns are mutually
//! orthogonal, which implicitly diagonalizes M^T M; singular values are
//! the final column norms. It is written independently of the power
//! iteration so the two can cross-check each other, and it keeps tiny
//! singular values near eps * ||M|| — the sign matrices here are heavily
//! rank-deficient (row p-j is the negation of row j), so that accuracy
//! is what makes spectrum comparisons at 1e-8 meaningful.

use crate::spectral::SignMatrix;

const ORTHO_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 64;

/// Singular values of a general dense matrix (column-major input),
/// sorted descending.
pub fn singular_values_dense(order: usize, columns: &mut [Vec<f64>]) -> Vec<f64> {
    assert_eq!(columns.len(), order);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..order {
            for j in (i + 1)..order {
                let (mut aii, mut ajj, mut aij) = (0.0f64, 0.0f64, 0.0f64);
                for r in 0..order {
                    let (ci, cj) = (columns[i][r], columns[j][r]);
                    aii += ci * ci;
                    ajj += cj * cj;
                    aij += ci * cj;
                }
                if aij.abs() <= ORTHO_TOL * (aii * ajj).sqrt() || aii == 0.0 || ajj == 0.0 {
                    continue;
                }
                rotated = true;
                let tau = (ajj - aii) / (2.0 * aij);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..order {
                    let (ci, cj) = (columns[i][r], columns[j][r]);
                    columns[i][r] = c * ci - s * cj;
                    columns[j][r] = s * ci + c * cj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigmas: Vec<f64> = columns
        .iter()
        .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sigmas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sigmas
}

/// Singular values of a sign matrix, sorted descending.
pub fn singular_values(m: &SignMatrix) -> Vec<f64> {
    let n = m.order();
    let mut columns: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| m.entry(i, j)).collect())
        .collect();
    singular_values_dense(n, &mut columns)
}
