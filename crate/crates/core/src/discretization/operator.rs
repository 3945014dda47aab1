use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::Result;
use crate::medium::Coefficient;
use crate::sparse::CsrMatrix;

/// How a face coefficient is sampled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceRule {
    /// Coefficient at the face midpoint.
    #[default]
    Midpoint,
    /// Harmonic mean of the coefficient at the two nodes sharing the face
    /// (boundary nodes included).
    Harmonic,
}

/// Dirichlet finite-difference discretization of `-div(a grad u)` on a box.
#[derive(Debug, Clone)]
pub struct SparseSymmetricOperator {
    pub matrix: CsrMatrix,
    pub grid: Grid,
}

impl SparseSymmetricOperator {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }
}

fn face_value(
    coefficient: &dyn Coefficient,
    rule: FaceRule,
    node: &[f64],
    axis: usize,
    direction: f64,
    h: f64,
) -> Result<f64> {
    let mut probe = node.to_vec();
    match rule {
        FaceRule::Midpoint => {
            probe[axis] += 0.5 * direction * h;
            coefficient.value(&probe)
        }
        FaceRule::Harmonic => {
            let here = coefficient.value(node)?;
            probe[axis] += direction * h;
            let there = coefficient.value(&probe)?;
            Ok(2.0 * here * there / (here + there))
        }
    }
}

/// Assembles the flux-form stencil: every face between two nodes contributes
/// `a(face) / h^2` to both diagonals and `-a(face) / h^2` to the shared off-diagonal pair;
/// faces on the Dirichlet boundary contribute only to the diagonal.
pub fn assemble_operator(
    grid: &Grid,
    coefficient: &dyn Coefficient,
    rule: FaceRule,
) -> Result<SparseSymmetricOperator> {
    let n = grid.len();
    let m = grid.nodes_per_axis;
    let d = grid.dim;
    let inv_h2 = 1.0 / (grid.h * grid.h);

    // up[k][i]: face between node i and i + e_k (boundary face when i_k = m - 1).
    // low[k][i]: boundary face below node i when i_k = 0.
    let mut up = vec![vec![0.0; n]; d];
    let mut low = vec![vec![0.0; n]; d];
    for i in 0..n {
        let idx = grid.multi_index(i);
        let x = grid.coordinate(i);
        for k in 0..d {
            up[k][i] = face_value(coefficient, rule, &x, k, 1.0, grid.h)? * inv_h2;
            if idx[k] == 0 {
                low[k][i] = face_value(coefficient, rule, &x, k, -1.0, grid.h)? * inv_h2;
            }
        }
    }

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(n * (2 * d + 1));
    let mut values = Vec::with_capacity(n * (2 * d + 1));
    row_ptr.push(0);
    for i in 0..n {
        let idx = grid.multi_index(i);
        let mut diag = 0.0;
        for k in 0..d {
            diag += up[k][i];
            diag += if idx[k] > 0 {
                up[k][i - grid.stride(k)]
            } else {
                low[k][i]
            };
        }
        for k in (0..d).rev() {
            if idx[k] > 0 {
                let j = i - grid.stride(k);
                col_idx.push(j);
                values.push(-up[k][j]);
            }
        }
        col_idx.push(i);
        values.push(diag);
        for k in 0..d {
            if idx[k] + 1 < m {
                col_idx.push(i + grid.stride(k));
                values.push(-up[k][i]);
            }
        }
        row_ptr.push(col_idx.len());
    }
    Ok(SparseSymmetricOperator {
        matrix: CsrMatrix::from_parts(n, row_ptr, col_idx, values)?,
        grid: grid.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, ResolutionPolicy};
    use crate::geometry::BoxSpec;
    use crate::medium::ConstantCoefficient;
    use nalgebra::SymmetricEigen;

    fn laplacian(dim: usize, h: f64, a: f64) -> SparseSymmetricOperator {
        let g = build_grid(&BoxSpec::at_origin(dim, 1.0), h, ResolutionPolicy::Unconstrained)
            .unwrap();
        assemble_operator(&g, &ConstantCoefficient(a), FaceRule::Midpoint).unwrap()
    }

    #[test]
    fn one_dimensional_stencil() {
        let op = laplacian(1, 0.25, 1.0);
        let a = op.matrix.to_dense();
        assert_eq!(a[(0, 0)], 32.0);
        assert_eq!(a[(0, 1)], -16.0);
        assert_eq!(a[(1, 0)], -16.0);
        assert_eq!(a[(0, 2)], 0.0);
        let mut ev = SymmetricEigen::new(a).eigenvalues.as_slice().to_vec();
        ev.sort_by(f64::total_cmp);
        let s = 16.0 * 2f64.sqrt();
        for (got, want) in ev.iter().zip([32.0 - s, 32.0, 32.0 + s]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_in_coefficient() {
        let one = laplacian(2, 0.25, 1.0);
        let soft = laplacian(2, 0.25, 0.0625);
        assert_eq!(soft.matrix, one.matrix.scaled(0.0625));
    }

    #[test]
    fn symmetric_and_diagonally_dominant() {
        let g = build_grid(&BoxSpec::at_origin(2, 1.0), 0.125, ResolutionPolicy::Unconstrained)
            .unwrap();
        let bumpy = |x: &[f64]| -> crate::Result<f64> { Ok(1.0 + x[0] * x[1] + 0.5 * x[0]) };
        let op = assemble_operator(&g, &bumpy, FaceRule::Midpoint).unwrap();
        assert_eq!(op.matrix.asymmetry(), 0.0);
        for i in 0..op.n() {
            let off: f64 = op
                .matrix
                .row(i)
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| {
                    assert!(v <= 0.0);
                    -v
                })
                .sum();
            assert!(op.matrix.get(i, i) >= off - 1e-12 * off);
        }
        // boundary rows carry the Dirichlet surplus
        assert!(op.matrix.get(0, 0) > op.matrix.get(0, 1).abs() + op.matrix.get(0, 8).abs());
        let harmonic = assemble_operator(&g, &bumpy, FaceRule::Harmonic).unwrap();
        assert_eq!(harmonic.matrix.asymmetry(), 0.0);
    }
}
