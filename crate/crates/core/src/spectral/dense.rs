//! Dense reference computations for small problems.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::sparse::CsrMatrix;

/// Ascending eigenvalues with matching eigenvector columns.
pub fn dense_eigen(a: &CsrMatrix) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(a.to_dense());
    let n = a.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn dense_eigenvalues(a: &CsrMatrix) -> Vec<f64> {
    let mut v = a.to_dense().symmetric_eigenvalues().as_slice().to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `#{lo < λ <= hi}` from a list of eigenvalues.
pub fn dense_count(values: &[f64], lo: f64, hi: f64) -> usize {
    values.iter().filter(|&&l| l > lo && l <= hi).count()
}

/// `‖χ_rows (A - E)⁻¹ χ_cols‖₂` from the eigendecomposition.
pub fn dense_block_resolvent_norm(
    values: &[f64],
    vectors: &DMatrix<f64>,
    e: f64,
    rows: &[usize],
    cols: &[usize],
) -> f64 {
    let k = values.len();
    let scaled_rows = DMatrix::from_fn(rows.len(), k, |r, c| {
        vectors[(rows[r], c)] / (values[c] - e)
    });
    let col_block = DMatrix::from_fn(cols.len(), k, |r, c| vectors[(cols[r], c)]);
    let block = scaled_rows * col_block.transpose();
    if block.is_empty() {
        return 0.0;
    }
    block.singular_values().max()
}

/// `e^{-itA} ψ` from the eigendecomposition.
pub fn dense_evolve(
    values: &[f64],
    vectors: &DMatrix<f64>,
    state: &[Complex64],
    t: f64,
) -> Vec<Complex64> {
    let n = values.len();
    let v = vectors.map(|x| Complex64::new(x, 0.0));
    let psi = DVector::from_column_slice(state);
    let mut coeff = v.transpose() * psi;
    for (k, c) in coeff.iter_mut().enumerate() {
        *c *= Complex64::from_polar(1.0, -t * values[k]);
    }
    let out = v * coeff;
    (0..n).map(|i| out[i]).collect()
}
