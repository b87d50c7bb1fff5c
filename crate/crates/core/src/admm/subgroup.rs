use ndarray::Array2;

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, RepresenterCoefficients};
use crate::scalar::Real;

/// label_i = I(z1_i + z2_iᵀγ ≥ 0); an index of exactly zero is labelled 1.
pub fn classify_subgroups<T: Real>(z1: &[T], z2: &Array2<T>, gamma: &[T]) -> Vec<bool> {
    assert_eq!(z1.len(), z2.nrows());
    assert_eq!(z2.ncols(), gamma.len());
    z1.iter()
        .zip(z2.rows())
        .map(|(&a, row)| row.iter().zip(gamma).fold(a, |acc, (&z, &g)| acc + z * g) >= T::zero())
        .collect()
}

/// 1 − mean |label_i − truth_i|.
pub fn accuracy<T: Real>(labels: &[bool], truth: &[bool]) -> Result<T> {
    if labels.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            found: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::DegenerateInput("accuracy of an empty labelling".into()));
    }
    let agree = labels.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(T::from_usize_lossy(agree) / T::from_usize_lossy(labels.len()))
}

/// Root mean squared error over the anchor grid of every component, in the
/// order (β_1, …, β_p, θ_1, …, θ_d).
pub fn rmise_per_component<T: Real>(
    coef: &RepresenterCoefficients<T>,
    kernel: &KernelSpec<T>,
    truth: impl Fn(T) -> Vec<T>,
) -> Vec<T> {
    let big_p = coef.p() + coef.d();
    let m = coef.grid.len();
    let mut sums = vec![T::zero(); big_p];
    for &s in &coef.grid {
        let est = coef.evaluate(kernel, s);
        let tru = truth(s);
        assert_eq!(tru.len(), big_p, "truth has the wrong number of components");
        for k in 0..big_p {
            let e = est[k] - tru[k];
            sums[k] = sums[k] + e * e;
        }
    }
    sums.into_iter().map(|s| (s / T::from_usize_lossy(m)).sqrt()).collect()
}

/// Σ_k sqrt(m⁻¹ Σ_j (α̂_k(s_j) − α_k(s_j))²).
pub fn rmise<T: Real>(coef: &RepresenterCoefficients<T>, kernel: &KernelSpec<T>, truth: impl Fn(T) -> Vec<T>) -> T {
    rmise_per_component(coef, kernel, truth).into_iter().sum()
}
