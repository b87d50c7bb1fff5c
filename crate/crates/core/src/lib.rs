//! Change-plane quantile regression for functional responses.
//!
//! A functional response `y_i(s)` observed on a shared grid is modelled at a
//! quantile level τ as
//!
//! ```text
//! Q_τ(y_i(s)) = x_iᵀβ(s) + x̃_iᵀθ(s) · I(z1_i + z2_iᵀγ ≥ 0)
//! ```
//!
//! with coefficient functions in a reproducing kernel Hilbert space. The
//! crate provides the estimator (smoothed check loss, ADMM), a weighted
//! test for the existence of the subgroup with a wild bootstrap, and a
//! simulation harness.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod data;
pub mod error;
pub mod inference;
pub mod kernels;
mod linalg;
pub mod rng;
pub mod scalar;
mod serde_matrix;
pub mod simulate;
pub mod smoothing;

pub use admm::{fit_changeplane, fit_null, AdmmConfig, ChangePlaneFit, GammaInit, NullFit};
pub use inference::{bootstrap_pvalue, wast_statistic, WastResult};
pub use data::{load_dataset, save_dataset, FunctionalDataset, Schema};
pub use error::{Error, ErrorKind, Result};

pub use kernels::{KernelFamily, KernelSpec, RepresenterCoefficients};
pub use scalar::Real;

pub type Dataset = FunctionalDataset<f64>;
pub type Config = AdmmConfig<f64>;
pub type Fit = ChangePlaneFit<f64>;
pub type Kernel = KernelSpec<f64>;
pub type TestResult = WastResult<f64>;


pub type Dataset32 = FunctionalDataset<f32>;
pub type Config32 = AdmmConfig<f32>;
pub type Fit32 = ChangePlaneFit<f32>;
