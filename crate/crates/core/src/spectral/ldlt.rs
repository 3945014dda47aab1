//! Up-looking sparse LDLᵀ of `P (A - E) Pᵀ` with Sylvester inertia.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ordering::{approximate_minimum_degree, invert};
use crate::error::{Error, Result};
use crate::sparse::{norm2, CsrMatrix};

/// Pivots below this multiple of `‖A‖∞` mark the shift as unresolved.
pub const PIVOT_THRESHOLD: f64 = 1e-12;
/// Normwise backward error `‖r‖ / (‖A - E‖ ‖x‖ + ‖b‖)` demanded from [`ShiftedFactorization::solve`].
pub const SOLVE_TOLERANCE: f64 = 1e-10;
/// Iterative refinement passes after the first solve.
pub const REFINEMENT_STEPS: usize = 3;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

impl Inertia {
    pub fn total(&self) -> usize {
        self.negative + self.zero + self.positive
    }
}

/// Ordering, elimination tree and column counts; shared by every shift of one matrix.
#[derive(Debug, Clone)]
pub struct SymbolicLdl {
    n: usize,
    perm: Vec<usize>,
    pinv: Vec<usize>,
    parent: Vec<usize>,
    col_ptr: Vec<usize>,
}

impl SymbolicLdl {
    pub fn new(a: &CsrMatrix) -> Self {
        Self::with_ordering(a, approximate_minimum_degree(a))
    }

    pub fn with_ordering(a: &CsrMatrix, perm: Vec<usize>) -> Self {
        let n = a.n();
        let pinv = invert(&perm);
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut counts = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for (j, _) in a.row(perm[k]) {
                let mut i = pinv[j];
                if i >= k {
                    continue;
                }
                while flag[i] != k {
                    if parent[i] == NONE {
                        parent[i] = k;
                    }
                    counts[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        col_ptr.push(0);
        for c in counts {
            col_ptr.push(col_ptr.last().unwrap() + c);
        }
        Self {
            n,
            perm,
            pinv,
            parent,
            col_ptr,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Strictly-lower nonzeros of the factor.
    pub fn factor_nnz(&self) -> usize {
        self.col_ptr[self.n]
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }
}

/// A matrix with its cached symbolic analysis, ready to factor at any shift.
#[derive(Debug, Clone)]
pub struct LdlContext<'a> {
    a: &'a CsrMatrix,
    symbolic: Arc<SymbolicLdl>,
    norm: f64,
}

impl<'a> LdlContext<'a> {
    pub fn new(a: &'a CsrMatrix) -> Self {
        Self {
            a,
            symbolic: Arc::new(SymbolicLdl::new(a)),
            norm: a.norm_inf(),
        }
    }

    pub fn matrix(&self) -> &'a CsrMatrix {
        self.a
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn symbolic(&self) -> &SymbolicLdl {
        &self.symbolic
    }

    /// Numeric factorization of `A - shift`.
    pub fn factor(&self, shift: f64) -> Result<ShiftedFactorization<'a>> {
        let sym = &self.symbolic;
        let n = sym.n;
        let threshold = PIVOT_THRESHOLD * self.norm;
        let nnz = sym.factor_nnz();
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        let mut flag = vec![NONE; n];
        let mut fill = vec![0usize; n];
        let mut inertia = Inertia {
            negative: 0,
            zero: 0,
            positive: 0,
        };

        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for (j, v) in self.a.row(sym.perm[k]) {
                let mut i = sym.pinv[j];
                if i > k {
                    continue;
                }
                y[i] += v;
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = sym.parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            let mut dk = y[k] - shift;
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let start = sym.col_ptr[i];
                let end = start + fill[i];
                for p in start..end {
                    y[li[p]] -= lx[p] * yi;
                }
                let l = yi / d[i];
                dk -= l * yi;
                li[end] = k;
                lx[end] = l;
                fill[i] += 1;
            }
            if !(dk.abs() >= threshold) {
                return Err(Error::UnresolvedShift {
                    shift,
                    pivot: dk,
                    step: k,
                });
            }
            if dk < 0.0 {
                inertia.negative += 1;
            } else {
                inertia.positive += 1;
            }
            d[k] = dk;
        }

        Ok(ShiftedFactorization {
            a: self.a,
            symbolic: Arc::clone(&self.symbolic),
            shift,
            li,
            lx,
            d,
            inertia,
            norm: self.norm,
        })
    }
}

/// `P (A - E) Pᵀ = L D Lᵀ` with unit lower `L` stored by columns and diagonal `D`.
#[derive(Debug, Clone)]
pub struct ShiftedFactorization<'a> {
    a: &'a CsrMatrix,
    symbolic: Arc<SymbolicLdl>,
    pub shift: f64,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    pub inertia: Inertia,
    norm: f64,
}

impl<'a> ShiftedFactorization<'a> {
    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn matrix(&self) -> &'a CsrMatrix {
        self.a
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    /// One pass of the triangular solves, no refinement.
    pub fn apply_inverse(&self, rhs: &[f64], out: &mut [f64]) {
        let sym = &self.symbolic;
        let n = self.n();
        let mut x: Vec<f64> = (0..n).map(|k| rhs[sym.perm[k]]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for p in sym.col_ptr[j]..sym.col_ptr[j + 1] {
                    x[self.li[p]] -= self.lx[p] * xj;
                }
            }
        }
        for (xj, dj) in x.iter_mut().zip(&self.d) {
            *xj /= dj;
        }
        for j in (0..n).rev() {
            let mut acc = x[j];
            for p in sym.col_ptr[j]..sym.col_ptr[j + 1] {
                acc -= self.lx[p] * x[self.li[p]];
            }
            x[j] = acc;
        }
        for k in 0..n {
            out[sym.perm[k]] = x[k];
        }
    }

    /// `r = rhs - (A - E) x`.
    fn residual(&self, x: &[f64], rhs: &[f64]) -> Vec<f64> {
        let mut r = self.a.matvec(x);
        for i in 0..r.len() {
            r[i] = rhs[i] - (r[i] - self.shift * x[i]);
        }
        r
    }

    /// Solves `(A - E) x = rhs`, refining until the residual is well inside the contract.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        let scale = norm2(rhs);
        if scale == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let operator_norm = self.norm + self.shift.abs();
        let backward_error = |x: &[f64], r: &[f64]| norm2(r) / (operator_norm * norm2(x) + scale);
        let mut x = vec![0.0; n];
        self.apply_inverse(rhs, &mut x);
        let mut dx = vec![0.0; n];
        let mut r = self.residual(&x, rhs);
        let mut residual = backward_error(&x, &r);
        for _ in 0..REFINEMENT_STEPS {
            if residual <= 0.01 * SOLVE_TOLERANCE {
                break;
            }
            self.apply_inverse(&r, &mut dx);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            r = self.residual(&x, rhs);
            residual = backward_error(&x, &r);
        }
        if !(residual <= SOLVE_TOLERANCE) {
            return Err(Error::SolveResidual {
                shift: self.shift,
                residual,
                tolerance: SOLVE_TOLERANCE,
            });
        }
        Ok(x)
    }
}

/// Factors `A - shift` from scratch.
pub fn factor(a: &CsrMatrix, shift: f64) -> Result<ShiftedFactorization<'_>> {
    LdlContext::new(a).factor(shift)
}

/// Solves `(A - E) x = rhs` against an existing factorization.
pub fn solve(f: &ShiftedFactorization<'_>, rhs: &[f64]) -> Result<Vec<f64>> {
    f.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn laplacian_2d(m: usize, h: f64) -> CsrMatrix {
        let mut t = Vec::new();
        let s = 1.0 / (h * h);
        for y in 0..m {
            for x in 0..m {
                let i = x + m * y;
                t.push((i, i, 4.0 * s));
                if x + 1 < m {
                    t.push((i, i + 1, -s));
                    t.push((i + 1, i, -s));
                }
                if y + 1 < m {
                    t.push((i, i + m, -s));
                    t.push((i + m, i, -s));
                }
            }
        }
        CsrMatrix::from_triplets(m * m, &t).unwrap()
    }

    #[test]
    fn diagonal_inertia() {
        let a = CsrMatrix::from_diagonal(&[1.0, 3.0]);
        let f = factor(&a, 2.0).unwrap();
        assert_eq!((f.inertia.negative, f.inertia.zero, f.inertia.positive), (1, 0, 1));
        let f = factor(&a, 0.0).unwrap();
        assert_eq!((f.inertia.negative, f.inertia.zero, f.inertia.positive), (0, 0, 2));
        assert!(matches!(factor(&a, 3.0), Err(Error::UnresolvedShift { .. })));
    }

    #[test]
    fn laplacian_inertia_matches_closed_form() {
        let h = 0.25;
        let a = laplacian_2d(3, h);
        let mut below = 0;
        for j in 1..=3 {
            for k in 1..=3 {
                let s = |q: usize| (q as f64 * std::f64::consts::PI * h / 2.0).sin().powi(2);
                if 4.0 / (h * h) * (s(j) + s(k)) < 10.0 {
                    below += 1;
                }
            }
        }
        assert_eq!(factor(&a, 10.0).unwrap().inertia.negative, below);
        // every eigenvalue sits above 10 except the lowest
        assert_eq!(below, 0);
        assert_eq!(factor(&a, 40.0).unwrap().inertia.negative, 1);
    }

    #[test]
    fn solves_recover_known_vectors() {
        let a = laplacian_2d(6, 1.0 / 7.0);
        let f = factor(&a, 0.0).unwrap();
        assert_eq!(f.solve(&vec![0.0; 36]).unwrap(), vec![0.0; 36]);
        let ones = vec![1.0; 36];
        let x = f.solve(&a.matvec(&ones)).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_solve_against_dense() {
        let a = laplacian_2d(5, 0.2);
        let e = 77.0;
        let f = factor(&a, e).unwrap();
        let rhs: Vec<f64> = (0..25).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        let x = f.solve(&rhs).unwrap();
        let dense = a.to_dense() - DMatrix::identity(25, 25) * e;
        let want = dense.lu().solve(&DMatrix::from_column_slice(25, 1, &rhs)).unwrap();
        for i in 0..25 {
            assert!((x[i] - want[i]).abs() < 1e-9 * want.amax());
        }
        let inertia = f.inertia;
        assert_eq!(inertia.total(), 25);
        let dense_neg = a
            .to_dense()
            .symmetric_eigenvalues()
            .iter()
            .filter(|&&l| l < e)
            .count();
        assert_eq!(inertia.negative, dense_neg);
    }
}
