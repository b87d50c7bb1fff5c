//! Penalized smoothed check-loss estimation by ADMM.
//!
//! One iteration runs the u-step (proximal operator of the check loss), the
//! joint (φ, d) least-squares step, a Gauss–Newton step on the grouping
//! parameter γ, and the scaled dual update, until both the primal and dual
//! residual norms fall below `tol`.

mod loss;
mod solver;
mod spectral;
mod subgroup;
mod tuning;

pub use loss::{check_loss, prox_check};
pub use solver::{
    fit_changeplane, fit_null, gamma_step, residual_norms, solve_varphi_d, update_u, update_zeta, AdmmState,
    ChangePlaneFit, GammaStep, IterationRecord, NullFit, Problem,
};
pub use spectral::{solve_penalized_least_squares, GramSpectrum};
pub use subgroup::{accuracy, classify_subgroups, rmise, rmise_per_component};
pub use tuning::{
    cross_validate_lambda, lambda_grid, select_lambda_oracle, LambdaSelection, LAMBDA_GRID_POINTS,
    LAMBDA_TILDE_RANGE,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::scalar::Real;

/// Starting value for the grouping parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaInit<T> {
    Zero,
    Values(Vec<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AdmmConfig<T> {
    pub tau: T,
    /// Penalty weight λ on the averaged loss scale.
    pub lambda: T,
    pub kappa: T,
    pub kernel: KernelSpec<T>,
    /// Fixed bandwidth; when `None` the rate rule is used.
    pub h: Option<T>,
    /// Bandwidth constant c_h of the rate rule.
    pub h_const: T,
    pub tol: T,
    pub max_iter: usize,
    pub gamma_init: GammaInit<T>,
    pub multistart: usize,
    pub seed: u64,
}

impl<T: Real> AdmmConfig<T> {
    pub fn new(tau: T, lambda: T) -> Self {
        AdmmConfig {
            tau,
            lambda,
            kappa: T::one(),
            kernel: KernelSpec::default(),
            h: None,
            h_const: T::one(),
            tol: T::lit(1e-3),
            max_iter: 500,
            gamma_init: GammaInit::Zero,
            multistart: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !(self.tau > T::zero() && self.tau < T::one()) {
            return Err(Error::InvalidConfig(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if !pos(self.lambda) {
            return Err(Error::InvalidConfig(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !pos(self.kappa) {
            return Err(Error::InvalidConfig(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !pos(self.tol) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if !pos(self.h_const) || self.h.is_some_and(|h| !pos(h)) {
            return Err(Error::InvalidConfig("bandwidth settings must be positive".into()));
        }
        if self.max_iter == 0 || self.multistart == 0 {
            return Err(Error::InvalidConfig("max_iter and multistart must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: T) -> Self {
        AdmmConfig { lambda, ..self.clone() }
    }
}
