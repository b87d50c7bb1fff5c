//! Exact solver for the joint (φ, d) least-squares subproblem
//!
//! ```text
//! min  (κ/2) Σ_ij (t_ij − W_iᵀφ − (W_i ⊗ K_{s_j})ᵀ d)² + (pen/2) dᵀ (I ⊗ K) d
//! ```
//!
//! The normal matrix is `κ (WᵀW) ⊗ E + pen · I ⊗ diag(0, K)` with
//! `E = Σ_j (1, K_{s_j}ᵀ)ᵀ(1, K_{s_j}ᵀ)`. Rotating by the eigenvectors of
//! `WᵀW` decouples the components, and the eigenvectors of `K` diagonalize
//! each block up to a rank-one intercept coupling. The kernel-coefficient
//! equations carry a common factor `K`; it is divided out analytically so
//! that tiny Gram eigenvalues never enter a denominator.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::SymmetricEigen;
use crate::scalar::Real;

/// Relative eigenvalue floor for the design cross-product WᵀW.
const DESIGN_RANK_TOL: f64 = 1e-12;

/// Eigendecomposition of the (jittered) Gram matrix, K = U Λ Uᵀ.
#[derive(Debug, Clone)]
pub struct GramSpectrum<T> {
    pub values: Vec<T>,
    pub vectors: Array2<T>,
    /// Uᵀ 1.
    ones_proj: Vec<T>,
}

impl<T: Real> GramSpectrum<T> {
    pub fn new(gram: &Array2<T>) -> Self {
        let eig = SymmetricEigen::new(gram);
        let m = gram.nrows();
        let values = eig.values.iter().map(|&v| v.max(T::zero())).collect();
        let ones_proj = (0..m)
            .map(|i| eig.vectors.column(i).iter().copied().sum())
            .collect();
        GramSpectrum {
            values,
            vectors: eig.vectors,
            ones_proj,
        }
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }
}

/// Returns `(varphi, d)` with `d` laid out as a `(P × m)` matrix whose row
/// `k` is the kernel coefficient vector of component `k` (row-major order
/// equals the stacked vector (b_1, …, b_p, c_1, …, c_d)).
#[allow(clippy::needless_range_loop)]
pub fn solve_penalized_least_squares<T: Real>(
    design: &Array2<T>,
    target: &Array2<T>,
    spectrum: &GramSpectrum<T>,
    kappa: T,
    penalty: T,
) -> Result<(Vec<T>, Array2<T>)> {
    let (n, big_p) = design.dim();
    let m = spectrum.m();
    assert_eq!(target.dim(), (n, m));
    if !(penalty > T::zero()) {
        return Err(Error::InvalidConfig("penalty weight must be positive".into()));
    }

    let cross = design.t().dot(design);
    let eig = SymmetricEigen::new(&cross);
    let dmax = eig.max_value();
    let wt = design.t().dot(target);
    let g0: Vec<T> = wt.rows().into_iter().map(|r| kappa * r.sum()).collect();
    let g = wt.dot(&spectrum.vectors).mapv(|v| v * kappa);

    let v = &eig.vectors;
    let mut phi_rot = vec![T::zero(); big_p];
    let mut a_rot = Array2::<T>::zeros((big_p, m));
    for l in 0..big_p {
        let dl = eig.values[l];
        if !(dmax > T::zero()) || dl <= T::lit(DESIGN_RANK_TOL) * dmax {
            return Err(Error::NumericalFailure {
                context: "(varphi, d) normal system: design cross-product is singular".into(),
                condition: if dmax > T::zero() { (dl / dmax).as_f64() } else { 0.0 },
            });
        }
        let c = kappa * dl;
        let g0l = (0..big_p).fold(T::zero(), |acc, k| acc + v[(k, l)] * g0[k]);
        let gl: Vec<T> = (0..m)
            .map(|i| (0..big_p).fold(T::zero(), |acc, k| acc + v[(k, l)] * g[(k, i)]))
            .collect();
        let mut coef = T::zero();
        let mut rhs = g0l;
        for i in 0..m {
            let lam = spectrum.values[i];
            let w = spectrum.ones_proj[i];
            let denom = c * lam + penalty;
            coef = coef + w * w / denom;
            rhs = rhs - c * lam * w * gl[i] / denom;
        }
        coef = coef * c * penalty;
        let phi = rhs / coef;
        phi_rot[l] = phi;
        for i in 0..m {
            a_rot[(l, i)] = (gl[i] - c * spectrum.ones_proj[i] * phi) / (c * spectrum.values[i] + penalty);
        }
    }

    let varphi: Vec<T> = (0..big_p)
        .map(|k| (0..big_p).fold(T::zero(), |acc, l| acc + v[(k, l)] * phi_rot[l]))
        .collect();
    let dmat = v.dot(&a_rot).dot(&spectrum.vectors.t());
    Ok((varphi, dmat))
}
