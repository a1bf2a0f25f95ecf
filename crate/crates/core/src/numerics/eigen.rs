//! Eigen-decomposition of small Hermitian matrices.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// (columns).
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

/// Largest `|m_ij − conj(m_ji)|`.
pub fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Diagonalises a Hermitian matrix. Inputs whose hermiticity defect exceeds
/// `1e-10·max(1, ‖m‖_max)` are rejected.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::Validation("eigen-decomposition needs a square matrix".into()));
    }
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let defect = hermiticity_defect(m);
    if defect > 1e-10 * scale {
        return Err(Error::Validation(format!(
            "matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}
