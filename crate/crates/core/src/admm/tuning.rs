//! Penalty selection: the oracle rule (minimum RMISE against known truth,
//! simulation only) and subject-level K-fold cross-validation.

use rand::seq::SliceRandom;

use super::loss::check_loss;
use super::solver::{fit_changeplane, fit_null, ChangePlaneFit};
use super::subgroup::{classify_subgroups, rmise};
use super::AdmmConfig;
use crate::data::FunctionalDataset;
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::Real;

/// λ̃ range; the penalty is λ = λ̃ / (nm).
pub const LAMBDA_TILDE_RANGE: (f64, f64) = (2.0, 8.0);
pub const LAMBDA_GRID_POINTS: usize = 40;

/// Stream id reserved for the fold assignment shuffle.
const CV_STREAM: u64 = 0xC5;

/// Evenly spaced λ̃ over [2, 8], rescaled by 1/(nm).
pub fn lambda_grid<T: Real>(n: usize, m: usize) -> Vec<T> {
    let (lo, hi) = LAMBDA_TILDE_RANGE;
    let nm = (n * m) as f64;
    (0..LAMBDA_GRID_POINTS)
        .map(|t| T::lit((lo + (hi - lo) * t as f64 / (LAMBDA_GRID_POINTS - 1) as f64) / nm))
        .collect()
}

#[derive(Debug, Clone)]
pub struct LambdaSelection<T> {
    pub lambda: T,
    pub index: usize,
    /// Criterion value for each λ of the grid.
    pub scores: Vec<T>,
    pub fit: ChangePlaneFit<T>,
}

/// Fits every λ of `grid` and keeps the one with the smallest RMISE against
/// `truth` (component values as a function of s).
pub fn select_lambda_oracle<T: Real>(
    ds: &FunctionalDataset<T>,
    cfg: &AdmmConfig<T>,
    grid: &[T],
    truth: impl Fn(T) -> Vec<T>,
) -> Result<LambdaSelection<T>> {
    let mut best: Option<(usize, T, ChangePlaneFit<T>)> = None;
    let mut scores = Vec::with_capacity(grid.len());
    for (index, &lambda) in grid.iter().enumerate() {
        let fit = fit_changeplane(ds, &cfg.with_lambda(lambda))?;
        let score = rmise(&fit.coef, &cfg.kernel, &truth);
        scores.push(score);
        if best.as_ref().is_none_or(|(_, b, _)| score < *b) {
            best = Some((index, score, fit));
        }
    }
    let (index, _, fit) = best.ok_or_else(|| Error::InvalidConfig("empty lambda grid".into()))?;
    let sel = LambdaSelection {
        lambda: grid[index],
        index,
        scores,
        fit,
    };
    Ok(sel)
}

/// Subject-level K-fold cross-validation on the unsmoothed check loss.
/// Returns the selected λ and the per-λ mean held-out loss. With
/// `null_model` the β-only model is fitted.
pub fn cross_validate_lambda<T: Real>(
    ds: &FunctionalDataset<T>,
    cfg: &AdmmConfig<T>,
    grid: &[T],
    folds: usize,
    null_model: bool,
) -> Result<(T, Vec<T>)> {
    let n = ds.n();
    if folds < 2 || folds > n {
        return Err(Error::InvalidConfig(format!("cannot run {folds}-fold CV on {n} subjects")));
    }
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty lambda grid".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(cfg.seed, CV_STREAM));
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    let splits: Vec<(FunctionalDataset<T>, Vec<usize>)> = (0..folds)
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
            ds.subset(&train).map(|t| (t, test))
        })
        .collect::<Result<_>>()?;

    let tau = cfg.tau;
    let mut scores = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let c = cfg.with_lambda(lambda);
        let mut total = T::zero();
        for (train, test) in &splits {
            let (beta, theta, labels) = if null_model {
                let fit = fit_null(train, &c)?;
                (fit.coef, None, None)
            } else {
                let fit = fit_changeplane(train, &c)?;
                let labels = classify_subgroups(ds.z1(), ds.z2(), &fit.gamma);
                (fit.coef.clone(), Some(fit.coef), Some(labels))
            };
            for &i in test {
                for (j, &s) in ds.grid().iter().enumerate() {
                    let vals = beta.evaluate(&c.kernel, s);
                    let mut pred = (0..ds.p()).fold(T::zero(), |a, k| a + ds.x()[(i, k)] * vals[k]);
                    if let (Some(th), Some(lab)) = (&theta, &labels) {
                        if lab[i] {
                            for (l, &col) in ds.xtilde_cols().iter().enumerate() {
                                pred = pred + ds.x()[(i, col)] * vals[th.p() + l];
                            }
                        }
                    }
                    total = total + check_loss(ds.y()[(i, j)] - pred, tau);
                }
            }
        }
        scores.push(total / T::from_usize_lossy(n * ds.m()));
    }
    let best = scores
        .iter()
        .enumerate()
        .fold(0, |b, (k, &s)| if s < scores[b] { k } else { b });
    Ok((grid[best], scores))
}
