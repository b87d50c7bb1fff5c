//! Small dense linear algebra kernels: a cyclic Jacobi eigensolver for
//! symmetric matrices and a Cholesky solve for small SPD systems.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigendecomposition `A = V diag(values) Vᵀ` of a symmetric matrix.
/// Columns of `vectors` are the eigenvectors; values are ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Array2<T>,
}

impl<T: Real> SymmetricEigen<T> {
    pub fn new(a: &Array2<T>) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "square matrix required");
        let mut m = a.clone();
        let mut v = Array2::<T>::eye(n);
        let eps = T::epsilon();

        for _sweep in 0..100 {
            let mut off = T::zero();
            let mut diag = T::zero();
            for i in 0..n {
                diag = diag + m[(i, i)] * m[(i, i)];
                for j in (i + 1)..n {
                    off = off + m[(i, j)] * m[(i, j)];
                }
            }
            if off <= eps * eps * diag || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    let theta = (aqq - app) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[(k, p)];
                        let mkq = m[(k, q)];
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[(p, k)];
                        let mqk = m[(q, k)];
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
        let values = order.iter().map(|&i| m[(i, i)]).collect();
        let mut vectors = Array2::<T>::zeros((n, n));
        for (dst, &src) in order.iter().enumerate() {
            for k in 0..n {
                vectors[(k, dst)] = v[(k, src)];
            }
        }
        SymmetricEigen { values, vectors }
    }

    pub fn max_value(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }
}

/// Solves `A x = b` for a symmetric positive definite `A` via Cholesky.
pub fn cholesky_solve<T: Real>(a: &Array2<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.nrows();
    let mut l = Array2::<T>::zeros((n, n));
    for j in 0..n {
        let mut s = a[(j, j)];
        for k in 0..j {
            s = s - l[(j, k)] * l[(j, k)];
        }
        if !(s > T::zero()) {
            return Err(Error::NumericalFailure {
                context: "cholesky".into(),
                condition: 0.0,
            });
        }
        let ljj = s.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s = s - l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Ok(x)
}
