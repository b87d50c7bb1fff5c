//! Weighted average squared score test (WAST) for the existence of a
//! subgroup, calibrated by a wild bootstrap under the null model.
//!
//! The weight of a pair of subjects integrates the product of their
//! threshold indicators against a standard normal prior on the grouping
//! direction, which has the closed orthant-probability form
//! `1/4 + arcsin(ρ_ij) / (2π)`.

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{fit_null, AdmmConfig, NullFit};
use crate::data::FunctionalDataset;
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::{dot, norm2, Real};

/// P(z_iᵀψ ≥ 0, z_jᵀψ ≥ 0) for ψ standard normal.
pub fn pairwise_weight<T: Real>(zi: &[T], zj: &[T]) -> Result<T> {
    assert_eq!(zi.len(), zj.len());
    let (ni, nj) = (norm2(zi), norm2(zj));
    if !(ni > T::zero() && nj > T::zero()) {
        return Err(Error::DegenerateInput("grouping vector with zero norm".into()));
    }
    // 1/4 + asin(cos θ)/(2π) = 1/2 − θ/(2π), with θ from the half-angle
    // form, which stays accurate for nearly parallel vectors.
    let (mut diff, mut sum) = (T::zero(), T::zero());
    for (&a, &b) in zi.iter().zip(zj) {
        let (a, b) = (a / ni, b / nj);
        diff = diff + (a - b) * (a - b);
        sum = sum + (a + b) * (a + b);
    }
    let theta = T::lit(2.0) * diff.sqrt().atan2(sum.sqrt());
    Ok(T::lit(0.5) - theta / T::lit(2.0 * std::f64::consts::PI))
}

/// `n × n` matrix w_ij · x̃_iᵀx̃_j with a zero diagonal.
pub fn pair_kernel<T: Real>(ds: &FunctionalDataset<T>) -> Result<Array2<T>> {
    let n = ds.n();
    let z: Vec<Vec<T>> = (0..n).map(|i| ds.z_full(i)).collect();
    let xt: Vec<Vec<T>> = (0..n).map(|i| ds.xtilde_row(i)).collect();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = pairwise_weight(&z[i], &z[j])? * dot(&xt[i], &xt[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// T_n from the pair kernel and null-model fitted values. Residual ties
/// count as `y ≤ fitted`.
pub fn wast_from_fitted<T: Real>(pairs: &Array2<T>, y: &Array2<T>, fitted: &Array2<T>, tau: T) -> T {
    let (n, m) = y.dim();
    assert_eq!(pairs.dim(), (n, n));
    assert_eq!(fitted.dim(), (n, m));
    let scores = Array2::from_shape_fn((n, m), |(i, k)| {
        let ind = if y[(i, k)] <= fitted[(i, k)] { T::one() } else { T::zero() };
        ind - tau
    });
    // Σ_k a_kᵀ P a_k with a_k the k-th score column.
    let pa = pairs.dot(&scores);
    let total = ndarray::Zip::from(&scores)
        .and(&pa)
        .fold(T::zero(), |acc, &a, &b| acc + a * b);
    let denom = T::from_usize_lossy(m) * T::from_usize_lossy(n) * T::from_usize_lossy(n.saturating_sub(1).max(1));
    total / denom
}

/// Observed statistic for a null fit on the same dataset.
pub fn wast_statistic<T: Real>(ds: &FunctionalDataset<T>, null_fit: &NullFit<T>, tau: T) -> Result<T> {
    if null_fit.fitted.dim() != ds.y().dim() {
        return Err(Error::LengthMismatch {
            expected: ds.n() * ds.m(),
            found: null_fit.fitted.len(),
        });
    }
    let pairs = pair_kernel(ds)?;
    Ok(wast_from_fitted(&pairs, ds.y(), &null_fit.fitted, tau))
}

/// Draw of the two-point wild bootstrap weight: −2τ with probability τ and
/// 2(1 − τ) otherwise, so P(w < 0) = τ.
pub fn bootstrap_weight<T: Real, R: Rng + ?Sized>(tau: T, rng: &mut R) -> T {
    let u: f64 = rng.random();
    if T::lit(u) < tau {
        -T::lit(2.0) * tau
    } else {
        T::lit(2.0) * (T::one() - tau)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct WastResult<T> {
    pub t_n: T,
    /// Bootstrap statistics in replicate order.
    pub boot: Vec<T>,
    /// Share of bootstrap statistics at least as large as `t_n`.
    pub p_value: T,
    /// Share of bootstrap statistics strictly below `t_n`; equals `1 − p_value`.
    pub cdf_at_observed: T,
    pub b: usize,
    pub tau: T,
    pub seed: u64,
    pub lambda: T,
}

impl<T: Real> WastResult<T> {
    pub fn sorted_boot(&self) -> Vec<T> {
        let mut v = self.boot.clone();
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite bootstrap statistics"));
        v
    }

    /// Level-α decision: reject when the p-value is below α, equivalently
    /// when `t_n` exceeds the upper α-quantile of the bootstrap sample.
    pub fn rejects(&self, alpha: T) -> bool {
        self.p_value < alpha
    }
}

/// Counts (#{boot ≥ t_n}, #{boot < t_n}) as shares of B.
pub fn bootstrap_shares<T: Real>(t_n: T, boot: &[T]) -> (T, T) {
    let b = T::from_usize_lossy(boot.len());
    let above = boot.iter().filter(|&&v| v >= t_n).count();
    let below = boot.len() - above;
    (T::from_usize_lossy(above) / b, T::from_usize_lossy(below) / b)
}

/// Runs the full test: null fit, observed statistic, `b` wild-bootstrap
/// refits. Replicate `r` draws its weights from stream `r` of `seed`.
pub fn bootstrap_pvalue<T: Real>(
    ds: &FunctionalDataset<T>,
    cfg: &AdmmConfig<T>,
    b: usize,
    seed: u64,
) -> Result<WastResult<T>> {
    if b == 0 {
        return Err(Error::InvalidConfig("the bootstrap needs B >= 1".into()));
    }
    let tau = cfg.tau;
    let null_fit = fit_null(ds, cfg)?;
    let pairs = pair_kernel(ds)?;
    let t_n = wast_from_fitted(&pairs, ds.y(), &null_fit.fitted, tau);
    let abs_resid = (ds.y() - &null_fit.fitted).mapv(|v| v.abs());
    let (n, m) = ds.y().dim();

    let boot = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let mut y_star = null_fit.fitted.clone();
            for i in 0..n {
                let w = bootstrap_weight(tau, &mut rng);
                for k in 0..m {
                    y_star[(i, k)] = y_star[(i, k)] + w * abs_resid[(i, k)];
                }
            }
            let tag = |e| Error::Replicate {
                index: r,
                source: Box::new(e),
            };
            let ds_star = ds.with_response(y_star).map_err(tag)?;
            let fit = fit_null(&ds_star, cfg).map_err(tag)?;
            Ok(wast_from_fitted(&pairs, ds_star.y(), &fit.fitted, tau))
        })
        .collect::<Result<Vec<T>>>()?;

    let (p_value, cdf_at_observed) = bootstrap_shares(t_n, &boot);
    Ok(WastResult {
        t_n,
        boot,
        p_value,
        cdf_at_observed,
        b,
        tau,
        seed,
        lambda: cfg.lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn weight_special_directions() {
        let z = [0.3, 1.0, -0.7];
        assert!((pairwise_weight(&z, &z).unwrap() - 0.5f64).abs() < 1e-15);
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        assert!(pairwise_weight(&z, &neg).unwrap().abs() < 1e-15);
        assert!((pairwise_weight(&[1.0, 0.0], &[0.0, 2.0]).unwrap() - 0.25f64).abs() < 1e-15);
        assert!(matches!(
            pairwise_weight(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn weight_matches_orthant_sampling() {
        let zi = [0.4, 1.0, 1.3, -0.2];
        let zj = [-1.1, 1.0, 0.2, 0.9];
        let w = pairwise_weight(&zi, &zj).unwrap();
        let mut rng = stream_rng(11, 0);
        let draws = 1_000_000;
        let mut hits = 0usize;
        let mut psi = [0.0f64; 4];
        for _ in 0..draws {
            psi.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
            if dot(&zi, &psi) >= 0.0 && dot(&zj, &psi) >= 0.0 {
                hits += 1;
            }
        }
        let p = hits as f64 / draws as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((w - p).abs() < 3.0 * se, "closed form {w}, sampled {p} ± {se}");
    }

    fn two_subject_dataset(z1: [f64; 2], y: [f64; 2]) -> FunctionalDataset<f64> {
        FunctionalDataset::new(
            array![[y[0]], [y[1]]],
            vec![0.5],
            array![[1.0], [1.0]],
            vec![0],
            z1.to_vec(),
            array![[1.0], [1.0]],
        )
        .unwrap()
    }

    #[test]
    fn hand_computed_statistic() {
        // Identical z (w = 1/2), x̃ = 1, both residuals negative at τ = 0.5.
        let ds = two_subject_dataset([2.0, 2.0], [-1.0, -2.0]);
        let pairs = pair_kernel(&ds).unwrap();
        let t = wast_from_fitted(&pairs, ds.y(), &Array2::zeros((2, 1)), 0.5);
        assert!((t - 0.125).abs() < 1e-15);
    }

    #[test]
    fn ties_count_as_below() {
        let ds = two_subject_dataset([2.0, 2.0], [0.0, 0.0]);
        let pairs = pair_kernel(&ds).unwrap();
        let t = wast_from_fitted(&pairs, ds.y(), &Array2::zeros((2, 1)), 0.5);
        assert!((t - 0.125).abs() < 1e-15);
    }

    fn random_instance(seed: u64, n: usize, m: usize) -> (FunctionalDataset<f64>, Array2<f64>) {
        let mut rng = stream_rng(seed, 0);
        let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
        let y = Array2::from_shape_fn((n, m), |_| g());
        let fitted = Array2::from_shape_fn((n, m), |_| 0.3 * g());
        let x = Array2::from_shape_fn((n, 3), |(_, k)| if k == 0 { 1.0 } else { g() });
        let z1: Vec<f64> = (0..n).map(|_| g()).collect();
        let z2 = Array2::from_shape_fn((n, 2), |(_, k)| if k == 0 { 1.0 } else { 1.0 + g() });
        let grid: Vec<f64> = (0..m).map(|j| (j as f64 + 0.5) / m as f64).collect();
        (FunctionalDataset::new(y, grid, x, vec![1, 2], z1, z2).unwrap(), fitted)
    }

    #[test]
    fn statistic_matches_integral_over_directions() {
        let (n, m, tau) = (20, 5, 0.5);
        let (ds, fitted) = random_instance(3, n, m);
        let t = wast_from_fitted(&pair_kernel(&ds).unwrap(), ds.y(), &fitted, tau);

        let z: Vec<Vec<f64>> = (0..n).map(|i| ds.z_full(i)).collect();
        let xt: Vec<Vec<f64>> = (0..n).map(|i| ds.xtilde_row(i)).collect();
        let score = |i: usize, k: usize| if ds.y()[(i, k)] <= fitted[(i, k)] { 1.0 - tau } else { -tau };
        let mut rng = stream_rng(4, 0);
        let draws = 200_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        let mut psi = vec![0.0; z[0].len()];
        for _ in 0..draws {
            psi.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
            let active: Vec<bool> = z.iter().map(|zi| dot(zi, &psi) >= 0.0).collect();
            let mut s = 0.0;
            for k in 0..m {
                let mut agg = [0.0; 2];
                let mut own = 0.0;
                for i in (0..n).filter(|&i| active[i]) {
                    let a = score(i, k);
                    agg[0] += xt[i][0] * a;
                    agg[1] += xt[i][1] * a;
                    own += dot(&xt[i], &xt[i]) * a * a;
                }
                s += agg[0] * agg[0] + agg[1] * agg[1] - own;
            }
            s /= (m * n * (n - 1)) as f64;
            sum += s;
            sum2 += s * s;
        }
        let mean = sum / draws as f64;
        let se = ((sum2 / draws as f64 - mean * mean) / draws as f64).sqrt();
        assert!((t - mean).abs() < 3.0 * se, "closed form {t}, integral {mean} ± {se}");
    }

    #[test]
    fn statistic_invariant_to_relabeling_and_z_scaling() {
        let (ds, fitted) = random_instance(5, 12, 4);
        let t = wast_from_fitted(&pair_kernel(&ds).unwrap(), ds.y(), &fitted, 0.3);
        let perm: Vec<usize> = (0..12).rev().collect();
        let dsp = ds.subset(&perm).unwrap();
        let fp = fitted.select(ndarray::Axis(0), &perm);
        let tp = wast_from_fitted(&pair_kernel(&dsp).unwrap(), dsp.y(), &fp, 0.3);
        assert!((t - tp).abs() < 1e-12 * t.abs().max(1.0));

        // Per-subject positive scaling of z; z2 column 0 must stay one, so
        // check the weights directly.
        let zi = ds.z_full(0);
        let zj = ds.z_full(1);
        let zi3: Vec<f64> = zi.iter().map(|v| 3.0 * v).collect();
        let zj7: Vec<f64> = zj.iter().map(|v| 0.7 * v).collect();
        let w = pairwise_weight(&zi, &zj).unwrap();
        assert!((w - pairwise_weight(&zi3, &zj7).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn weight_fractions_match_tau() {
        for tau in [0.25, 0.5, 0.75] {
            let mut rng = stream_rng(9, 0);
            let draws = 100_000;
            let neg = (0..draws).filter(|_| bootstrap_weight(tau, &mut rng) < 0.0).count();
            let frac = neg as f64 / draws as f64;
            let se = (tau * (1.0 - tau) / draws as f64).sqrt();
            assert!((frac - tau).abs() < 3.0 * se);
        }
    }

    #[test]
    fn shares_follow_counting_rule() {
        let (p, c) = bootstrap_shares(1.0, &[2.0]);
        assert_eq!((p, c), (1.0, 0.0));
        let (p, c) = bootstrap_shares(1.0, &[0.5]);
        assert_eq!((p, c), (0.0, 1.0));
        let (p, _) = bootstrap_shares(1.0, &[0.5, 1.0, 3.0, -1.0]);
        assert_eq!(p, 0.5);
    }

    proptest! {
        #[test]
        fn weight_symmetric_and_bounded(
            a in proptest::collection::vec(-3.0f64..3.0, 3),
            b in proptest::collection::vec(-3.0f64..3.0, 3),
        ) {
            prop_assume!(norm2(&a) > 1e-6 && norm2(&b) > 1e-6);
            let w = pairwise_weight(&a, &b).unwrap();
            prop_assert!((0.0..=0.5).contains(&w));
            prop_assert_eq!(w, pairwise_weight(&b, &a).unwrap());
        }
    }
}
