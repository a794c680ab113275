//! Sparse Cholesky factorizations for the real and Hermitian systems, with
//! a residual check and one step of iterative refinement per solve.

use std::ops::{AddAssign, Mul, Sub};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::SparseMatrix;

/// Scalars the factorizations work with: `f64` and `Complex64`.
pub trait Scalar:
    faer::traits::ComplexField
    + Copy
    + Default
    + AddAssign
    + Mul<Output = Self>
    + Sub<Output = Self>
    + Send
    + Sync
{
    fn norm_sqr(self) -> f64;
}

impl Scalar for f64 {
    fn norm_sqr(self) -> f64 {
        self * self
    }
}

impl Scalar for Complex64 {
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
}

/// Relative residual above which a solve gets one refinement step.
const REFINE_THRESHOLD: f64 = 1e-12;

/// Cholesky factorization `A = L Lᴴ` of a symmetric (Hermitian) positive
/// definite sparse matrix. Keeps `A` for residual checks.
pub struct Factorization<T: Scalar> {
    matrix: SparseMatrix<T>,
    llt: Llt<usize, T>,
}

impl<T: Scalar> std::fmt::Debug for Factorization<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization")
            .field("dim", &self.matrix.rows)
            .field("nnz", &self.matrix.nnz())
            .finish()
    }
}

impl<T: Scalar> Factorization<T> {
    pub fn new(matrix: SparseMatrix<T>) -> Result<Self> {
        if matrix.rows != matrix.cols {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows,
                got: matrix.cols,
            });
        }
        let a = matrix.to_faer()?;
        let symbolic = SymbolicLlt::try_new(a.symbolic(), Side::Lower)
            .map_err(|e| Error::Numerical(format!("symbolic factorization: {e:?}")))?;
        let llt = Llt::try_new_with_symbolic(symbolic, a.as_ref(), Side::Lower)
            .map_err(|_| Error::NotPositiveDefinite)?;
        Ok(Self { matrix, llt })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn matrix(&self) -> &SparseMatrix<T> {
        &self.matrix
    }

    fn raw_solve(&self, b: &[T]) -> Vec<T> {
        let mut x = Mat::<T>::from_fn(b.len(), 1, |i, _| b[i]);
        self.llt.solve_in_place(x.as_mut());
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }

    /// Solves `A x = b`. Non-finite output is reported as a numerical error.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: b.len(),
            });
        }
        let mut x = self.raw_solve(b);
        let b_norm = norm(b);
        if b_norm > 0.0 {
            let r = self.residual(&x, b);
            if norm(&r) > REFINE_THRESHOLD * b_norm {
                let dx = self.raw_solve(&r);
                for (xi, di) in x.iter_mut().zip(dx) {
                    *xi += di;
                }
            }
        }
        if x.iter().any(|v| !v.norm_sqr().is_finite()) {
            return Err(Error::Numerical("non-finite solution".into()));
        }
        Ok(x)
    }

    /// `b - A x`.
    pub fn residual(&self, x: &[T], b: &[T]) -> Vec<T> {
        let ax = self.matrix.mul_vec(x);
        b.iter().zip(ax).map(|(&bi, ai)| bi - ai).collect()
    }

    /// `‖b - A x‖ / ‖b‖`.
    pub fn relative_residual(&self, x: &[T], b: &[T]) -> f64 {
        let bn = norm(b);
        if bn == 0.0 {
            return norm(&self.residual(x, b));
        }
        norm(&self.residual(x, b)) / bn
    }
}

pub fn norm<T: Scalar>(v: &[T]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}
