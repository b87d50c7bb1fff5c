//! Smoothed indicator G_h(w) = Φ(w / h) used in place of I(w ≥ 0) while
//! estimating the grouping parameter, and the bandwidth rate rule.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::scalar::Real;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSpec<T> {
    pub h: T,
    pub c_h: T,
}

impl<T: Real> SmoothingSpec<T> {
    pub fn new(h: T) -> Result<Self> {
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::InvalidConfig(format!("bandwidth must be positive, got {h}")));
        }
        Ok(SmoothingSpec { h, c_h: T::one() })
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// G_h(w) = Φ(w / h).
pub fn smooth_indicator<T: Real>(spec: &SmoothingSpec<T>, w: T) -> T {
    T::lit(normal_cdf((w / spec.h).as_f64()))
}

/// d/dw G_h(w) = φ(w / h) / h.
pub fn smooth_indicator_deriv<T: Real>(spec: &SmoothingSpec<T>, w: T) -> T {
    let u = (w / spec.h).as_f64();
    T::lit(INV_SQRT_2PI * (-0.5 * u * u).exp()) / spec.h
}

/// h = c_h · index_sd · n^(-2/5).
pub fn default_bandwidth<T: Real>(n: usize, index_sd: T, c_h: T) -> T {
    c_h * index_sd * T::from_usize_lossy(n).powf(T::lit(-0.4))
}
