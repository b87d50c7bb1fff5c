//! Synthetic functional change-plane designs and replicated experiment
//! campaigns (estimation accuracy and test size/power).
//!
//! Design: x = (1, x̃₁, x̃₂) with x̃ bivariate normal, correlation 0.5;
//! z = (z1, 1, z2) with z1 ~ N(0, 1), z2 ~ N(1, 1); grid points U[0, 1];
//! β = (sin πs, (1 − s)³, e^{−3s}); θ = ξ · (4 cos(πs/2) + 3s³, 3s² + 3).
//! Errors are correlated along the grid with Σ_jl = exp(−(s_j − s_l)²/0.64)
//! and shifted so that their marginal τ-quantile is zero.

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::admm::{
    accuracy, classify_subgroups, cross_validate_lambda, fit_changeplane, lambda_grid, rmise_per_component,
    select_lambda_oracle, AdmmConfig,
};
use crate::data::FunctionalDataset;
use crate::error::{Error, Result};
use crate::inference::bootstrap_pvalue;
use crate::linalg::SymmetricEigen;
use crate::rng::{derive_seed, stream_rng};
use crate::scalar::Real;

/// Squared length scale of the error covariance (0.8²).
const ERROR_LENGTH_SQ: f64 = 0.64;

/// Share of failed replicates above which a cell is flagged partial.
const PARTIAL_FAILURE_SHARE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorFamily {
    Gaussian,
    T3,
    Laplace,
    /// No noise at all.
    None,
}

impl FromStr for ErrorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(ErrorFamily::Gaussian),
            "t3" | "t" => Ok(ErrorFamily::T3),
            "laplace" => Ok(ErrorFamily::Laplace),
            "none" | "zero" => Ok(ErrorFamily::None),
            other => Err(Error::InvalidConfig(format!("unknown error family '{other}'"))),
        }
    }
}

impl std::fmt::Display for ErrorFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ErrorFamily::Gaussian => "gaussian",
            ErrorFamily::T3 => "t3",
            ErrorFamily::Laplace => "laplace",
            ErrorFamily::None => "none",
        };
        f.write_str(s)
    }
}

impl ErrorFamily {
    /// Marginal quantile F⁻¹(τ) of the uncentered error.
    pub fn quantile(self, tau: f64) -> f64 {
        match self {
            ErrorFamily::Gaussian => Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(tau),
            ErrorFamily::T3 => StudentsT::new(0.0, 1.0, 3.0).expect("t3").inverse_cdf(tau),
            ErrorFamily::Laplace => {
                let b = std::f64::consts::FRAC_1_SQRT_2;
                if tau <= 0.5 {
                    b * (2.0 * tau).ln()
                } else {
                    -b * (2.0 * (1.0 - tau)).ln()
                }
            }
            ErrorFamily::None => 0.0,
        }
    }
}

/// Σ_jl = exp(−(s_j − s_l)² / 0.64).
pub fn error_covariance(grid: &[f64]) -> Array2<f64> {
    let m = grid.len();
    Array2::from_shape_fn((m, m), |(j, l)| {
        let d = grid[j] - grid[l];
        (-d * d / ERROR_LENGTH_SQ).exp()
    })
}

/// Draws whole error curves with a given grid covariance.
#[derive(Debug, Clone)]
pub struct ErrorSampler {
    family: ErrorFamily,
    /// Symmetric square root factor L with L Lᵀ = Σ (negative eigenvalues
    /// from round-off clamped to zero).
    root: Array2<f64>,
    chi3: ChiSquared<f64>,
}

impl ErrorSampler {
    pub fn new(family: ErrorFamily, cov: &Array2<f64>) -> Self {
        let eig = SymmetricEigen::new(cov);
        let m = cov.nrows();
        let root = Array2::from_shape_fn((m, m), |(j, k)| eig.vectors[(j, k)] * eig.values[k].max(0.0).sqrt());
        ErrorSampler {
            family,
            root,
            chi3: ChiSquared::new(3.0).expect("valid degrees of freedom"),
        }
    }

    pub fn family(&self) -> ErrorFamily {
        self.family
    }

    /// One uncentered error curve ẽ over the grid.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.root.nrows();
        if self.family == ErrorFamily::None {
            return vec![0.0; m];
        }
        let g: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        let scale = match self.family {
            ErrorFamily::Gaussian => 1.0,
            ErrorFamily::T3 => 1.0 / (self.chi3.sample(rng) / 3.0).sqrt(),
            ErrorFamily::Laplace => {
                let w: f64 = Exp1.sample(rng);
                w.sqrt()
            }
            ErrorFamily::None => unreachable!(),
        };
        (0..m)
            .map(|j| scale * (0..m).fold(0.0, |acc, k| acc + self.root[(j, k)] * g[k]))
            .collect()
    }
}

/// One simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub error_family: ErrorFamily,
    /// Multiplier ξ of the subgroup effect; 0 gives the null model.
    pub xi_effect: f64,
    #[serde(default = "default_gamma0")]
    pub gamma0: Vec<f64>,
    pub seed: u64,
}

fn default_gamma0() -> Vec<f64> {
    vec![-1.0, 1.0]
}

/// γ for the testing design: the hyperplane z1 + γ₁ + ψ₂ z2 = 0 cuts the
/// population at the `share` quantile of z1 + ψ₂ z2 (z1 ~ N(0, 1),
/// z2 ~ N(1, 1)), leaving 1 − share of subjects in the subgroup.
pub fn power_design_gamma(psi2: f64, share: f64) -> Vec<f64> {
    let sd = (1.0 + psi2 * psi2).sqrt();
    let q = Normal::new(psi2, sd).expect("valid normal").inverse_cdf(share);
    vec![-q, psi2]
}

impl SimScenario {
    pub fn new(n: usize, m: usize, tau: f64, error_family: ErrorFamily, xi_effect: f64, seed: u64) -> Self {
        SimScenario {
            n,
            m,
            tau,
            error_family,
            xi_effect,
            gamma0: default_gamma0(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 || self.m < 2 {
            return Err(Error::InvalidConfig(format!(
                "scenario needs n >= 10 and m >= 2, got n = {}, m = {}",
                self.n, self.m
            )));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidConfig(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if !(self.xi_effect >= 0.0 && self.xi_effect.is_finite()) {
            return Err(Error::InvalidConfig("xi_effect must be a finite nonnegative number".into()));
        }
        if self.gamma0.len() != 2 {
            return Err(Error::InvalidConfig("gamma0 must have two entries".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SimScenario { seed, ..self.clone() }
    }
}

/// Ground truth of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub gamma0: Vec<f64>,
    pub xi_effect: f64,
    pub labels: Vec<bool>,
    /// F⁻¹(τ) removed from the raw errors.
    pub error_shift: f64,
}

impl TruthRecord {
    /// (β₁, β₂, β₃, θ₁, θ₂) at s.
    pub fn components(&self, s: f64) -> Vec<f64> {
        true_components(s, self.xi_effect)
    }
}

pub fn true_components(s: f64, xi: f64) -> Vec<f64> {
    use std::f64::consts::PI;
    vec![
        (PI * s).sin(),
        (1.0 - s).powi(3),
        (-3.0 * s).exp(),
        xi * (4.0 * (0.5 * PI * s).cos() + 3.0 * s.powi(3)),
        xi * (3.0 * s * s + 3.0),
    ]
}

/// Draws one dataset; a pure function of the scenario (its seed included).
pub fn generate_dataset<T: Real>(sc: &SimScenario) -> Result<(FunctionalDataset<T>, TruthRecord)> {
    sc.validate()?;
    let (n, m) = (sc.n, sc.m);
    let mut rng: ChaCha8Rng = stream_rng(sc.seed, 0);

    let mut grid: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    if grid.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DuplicateGrid(grid[0]));
    }
    let sampler = ErrorSampler::new(sc.error_family, &error_covariance(&grid));
    let shift = sc.error_family.quantile(sc.tau);
    let comps: Vec<Vec<f64>> = grid.iter().map(|&s| true_components(s, sc.xi_effect)).collect();
    let rho = 0.5f64;
    let rho_c = (1.0 - rho * rho).sqrt();

    let mut y = Array2::zeros((n, m));
    let mut x = Array2::zeros((n, 3));
    let mut z1 = Vec::with_capacity(n);
    let mut z2 = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let g1: f64 = StandardNormal.sample(&mut rng);
        let g2: f64 = StandardNormal.sample(&mut rng);
        let xt = [g1, rho * g1 + rho_c * g2];
        let zz1: f64 = StandardNormal.sample(&mut rng);
        let g3: f64 = StandardNormal.sample(&mut rng);
        let zz2 = 1.0 + g3;
        let e = sampler.draw(&mut rng);
        let on = zz1 + sc.gamma0[0] + sc.gamma0[1] * zz2 >= 0.0;
        for j in 0..m {
            let c = &comps[j];
            let mut v = c[0] + xt[0] * c[1] + xt[1] * c[2];
            if on {
                v += xt[0] * c[3] + xt[1] * c[4];
            }
            y[(i, j)] = T::lit(v + e[j] - shift);
        }
        x[(i, 0)] = T::one();
        x[(i, 1)] = T::lit(xt[0]);
        x[(i, 2)] = T::lit(xt[1]);
        z1.push(T::lit(zz1));
        z2[(i, 0)] = T::one();
        z2[(i, 1)] = T::lit(zz2);
        labels.push(on);
    }
    let grid_t: Vec<T> = grid.iter().map(|&s| T::lit(s)).collect();
    let ds = FunctionalDataset::new(y, grid_t, x, vec![1, 2], z1, z2)?;
    Ok((
        ds,
        TruthRecord {
            gamma0: sc.gamma0.clone(),
            xi_effect: sc.xi_effect,
            labels,
            error_shift: shift,
        },
    ))
}

/// How λ is chosen inside a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum LambdaRule {
    /// Minimum RMISE over the standard grid (needs the truth).
    Oracle,
    /// λ = λ̃ / (nm).
    Fixed { lambda_tilde: f64 },
    /// Subject-level K-fold cross-validation over the standard grid.
    Cv { folds: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub index: usize,
    pub seed: u64,
    pub lambda_tilde: f64,
    /// Per-component RMISE (estimation campaigns).
    pub rmise: Vec<f64>,
    pub accuracy: Option<f64>,
    pub converged: Option<bool>,
    pub t_n: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub scenario: SimScenario,
    pub requested: usize,
    pub completed: usize,
    pub failures: Vec<ReplicateFailure>,
    pub partial: bool,
    pub rmise_mean: Vec<f64>,
    pub rmise_sd: Vec<f64>,
    pub accuracy_mean: Option<f64>,
    pub accuracy_sd: Option<f64>,
    pub rejection_rate: Option<f64>,
    /// Monte Carlo standard error of the rejection rate.
    pub rejection_se: Option<f64>,
    pub replicates: Vec<ReplicateRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub cells: Vec<CellSummary>,
    pub reps: usize,
    pub lambda_rule: LambdaRule,
    /// Bootstrap size and level for testing campaigns.
    pub b: Option<usize>,
    pub alpha: Option<f64>,
    pub wall_seconds: f64,
}

/// Mean and sample standard deviation (0 for a single value).
fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn replicate_seed(sc: &SimScenario, rep: usize) -> u64 {
    derive_seed(sc.seed, rep as u64)
}

fn resolve_lambda(
    rule: LambdaRule,
    ds: &FunctionalDataset<f64>,
    cfg: &AdmmConfig<f64>,
    null_model: bool,
) -> Result<f64> {
    let nm = (ds.n() * ds.m()) as f64;
    match rule {
        LambdaRule::Fixed { lambda_tilde } => Ok(lambda_tilde / nm),
        LambdaRule::Cv { folds } => {
            let grid = lambda_grid::<f64>(ds.n(), ds.m());
            cross_validate_lambda(ds, cfg, &grid, folds, null_model).map(|(l, _)| l)
        }
        LambdaRule::Oracle => Err(Error::InvalidConfig(
            "the oracle rule needs an estimation campaign".into(),
        )),
    }
}

fn summarize_cell(
    sc: &SimScenario,
    reps: usize,
    outcomes: Vec<std::result::Result<ReplicateRecord, ReplicateFailure>>,
    alpha: Option<f64>,
) -> CellSummary {
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    records.sort_by_key(|r| r.index);
    failures.sort_by_key(|f| f.index);
    let completed = records.len();
    let n_comp = records.first().map_or(0, |r| r.rmise.len());
    let (mut rmise_mean, mut rmise_sd) = (Vec::new(), Vec::new());
    for k in 0..n_comp {
        let v: Vec<f64> = records.iter().map(|r| r.rmise[k]).collect();
        let (mu, sd) = mean_sd(&v);
        rmise_mean.push(mu);
        rmise_sd.push(sd);
    }
    let acc: Vec<f64> = records.iter().filter_map(|r| r.accuracy).collect();
    let (accuracy_mean, accuracy_sd) = if acc.is_empty() {
        (None, None)
    } else {
        let (mu, sd) = mean_sd(&acc);
        (Some(mu), Some(sd))
    };
    let pv: Vec<f64> = records.iter().filter_map(|r| r.p_value).collect();
    let (rejection_rate, rejection_se) = match alpha {
        Some(a) if !pv.is_empty() => {
            let rate = pv.iter().filter(|&&p| p < a).count() as f64 / pv.len() as f64;
            (Some(rate), Some((rate * (1.0 - rate) / pv.len() as f64).sqrt()))
        }
        _ => (None, None),
    };
    CellSummary {
        scenario: sc.clone(),
        requested: reps,
        completed,
        partial: failures.len() as f64 > PARTIAL_FAILURE_SHARE * reps as f64,
        failures,
        rmise_mean,
        rmise_sd,
        accuracy_mean,
        accuracy_sd,
        rejection_rate,
        rejection_se,
        replicates: records,
    }
}

/// Estimation campaign: per replicate, draw a dataset, pick λ by `rule`,
/// fit, and record per-component RMISE and subgroup accuracy.
pub fn run_estimation_experiment(
    cells: &[SimScenario],
    cfg: &AdmmConfig<f64>,
    reps: usize,
    rule: LambdaRule,
) -> Result<ExperimentSummary> {
    if reps == 0 {
        return Err(Error::InvalidConfig("reps must be >= 1".into()));
    }
    let start = Instant::now();
    let mut out = Vec::with_capacity(cells.len());
    for sc in cells {
        sc.validate()?;
        let cfg = AdmmConfig { tau: sc.tau, ..cfg.clone() };
        let outcomes = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let seed = replicate_seed(sc, rep);
                estimation_replicate(&sc.with_seed(seed), &cfg, rule).map_err(|e| ReplicateFailure {
                    index: rep,
                    message: e.to_string(),
                }).map(|mut r| {
                    r.index = rep;
                    r
                })
            })
            .collect();
        out.push(summarize_cell(sc, reps, outcomes, None));
    }
    Ok(ExperimentSummary {
        cells: out,
        reps,
        lambda_rule: rule,
        b: None,
        alpha: None,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn estimation_replicate(sc: &SimScenario, cfg: &AdmmConfig<f64>, rule: LambdaRule) -> Result<ReplicateRecord> {
    let (ds, truth) = generate_dataset::<f64>(sc)?;
    let nm = (ds.n() * ds.m()) as f64;
    let fit = match rule {
        LambdaRule::Oracle => {
            let grid = lambda_grid::<f64>(ds.n(), ds.m());
            select_lambda_oracle(&ds, cfg, &grid, |s| truth.components(s))?.fit
        }
        _ => {
            let lambda = resolve_lambda(rule, &ds, cfg, false)?;
            fit_changeplane(&ds, &cfg.with_lambda(lambda))?
        }
    };
    let rmise = rmise_per_component(&fit.coef, &cfg.kernel, |s| truth.components(s));
    let labels = classify_subgroups(ds.z1(), ds.z2(), &fit.gamma);
    Ok(ReplicateRecord {
        index: 0,
        seed: sc.seed,
        lambda_tilde: fit.lambda * nm,
        rmise,
        accuracy: Some(accuracy(&labels, &truth.labels)?),
        converged: Some(fit.converged),
        t_n: None,
        p_value: None,
    })
}

/// Testing campaign: per replicate, draw a dataset and run the bootstrap
/// test; the cell reports the rejection rate at level `alpha`.
pub fn run_test_experiment(
    cells: &[SimScenario],
    cfg: &AdmmConfig<f64>,
    reps: usize,
    b: usize,
    alpha: f64,
    rule: LambdaRule,
) -> Result<ExperimentSummary> {
    if reps == 0 || b == 0 {
        return Err(Error::InvalidConfig("reps and B must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if matches!(rule, LambdaRule::Oracle) {
        return Err(Error::InvalidConfig("testing campaigns need a fixed or cross-validated lambda".into()));
    }
    let start = Instant::now();
    let mut out = Vec::with_capacity(cells.len());
    for sc in cells {
        sc.validate()?;
        let cfg = AdmmConfig { tau: sc.tau, ..cfg.clone() };
        let outcomes = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let seed = replicate_seed(sc, rep);
                test_replicate(&sc.with_seed(seed), &cfg, b, rule)
                    .map(|mut r| {
                        r.index = rep;
                        r
                    })
                    .map_err(|e| ReplicateFailure {
                        index: rep,
                        message: e.to_string(),
                    })
            })
            .collect();
        out.push(summarize_cell(sc, reps, outcomes, Some(alpha)));
    }
    Ok(ExperimentSummary {
        cells: out,
        reps,
        lambda_rule: rule,
        b: Some(b),
        alpha: Some(alpha),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn test_replicate(sc: &SimScenario, cfg: &AdmmConfig<f64>, b: usize, rule: LambdaRule) -> Result<ReplicateRecord> {
    let (ds, _) = generate_dataset::<f64>(sc)?;
    let lambda = resolve_lambda(rule, &ds, cfg, true)?;
    let res = bootstrap_pvalue(&ds, &cfg.with_lambda(lambda), b, derive_seed(sc.seed, 1))?;
    Ok(ReplicateRecord {
        index: 0,
        seed: sc.seed,
        lambda_tilde: lambda * (ds.n() * ds.m()) as f64,
        rmise: Vec::new(),
        accuracy: None,
        converged: None,
        t_n: Some(res.t_n),
        p_value: Some(res.p_value),
    })
}

/// Campaign description loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub cells: Vec<SimScenario>,
    pub reps: usize,
    #[serde(default)]
    pub b: Option<usize>,
    #[serde(default)]
    pub alpha: Option<f64>,
    pub lambda_rule: LambdaRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Estimation,
    Power,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn run(&self, cfg: &AdmmConfig<f64>) -> Result<ExperimentSummary> {
        match self.kind {
            ExperimentKind::Estimation => run_estimation_experiment(&self.cells, cfg, self.reps, self.lambda_rule),
            ExperimentKind::Power => run_test_experiment(
                &self.cells,
                cfg,
                self.reps,
                self.b.unwrap_or(200),
                self.alpha.unwrap_or(0.05),
                self.lambda_rule,
            ),
        }
    }
}

const COMPONENT_NAMES: [&str; 5] = ["beta1", "beta2", "beta3", "theta1", "theta2"];

/// One row per cell with RMISE and accuracy aggregates.
pub fn write_estimation_table(summary: &ExperimentSummary, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["tau", "n", "m", "dist", "xi", "reps", "completed", "partial"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for c in COMPONENT_NAMES {
        header.push(format!("rmise_{c}_mean"));
        header.push(format!("rmise_{c}_sd"));
    }
    header.extend(["accuracy_mean".to_string(), "accuracy_sd".to_string()]);
    w.write_record(&header)?;
    for cell in &summary.cells {
        let sc = &cell.scenario;
        let mut row = vec![
            sc.tau.to_string(),
            sc.n.to_string(),
            sc.m.to_string(),
            sc.error_family.to_string(),
            sc.xi_effect.to_string(),
            cell.requested.to_string(),
            cell.completed.to_string(),
            cell.partial.to_string(),
        ];
        for k in 0..COMPONENT_NAMES.len() {
            row.push(cell.rmise_mean.get(k).map_or(String::new(), f64::to_string));
            row.push(cell.rmise_sd.get(k).map_or(String::new(), f64::to_string));
        }
        row.push(cell.accuracy_mean.map_or(String::new(), |v| v.to_string()));
        row.push(cell.accuracy_sd.map_or(String::new(), |v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Power curve: one row per cell (xi, rejection rate, Monte Carlo se).
pub fn write_power_table(summary: &ExperimentSummary, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["tau", "n", "m", "dist", "xi", "reps", "completed", "partial", "rate", "mc_se"])?;
    for cell in &summary.cells {
        let sc = &cell.scenario;
        w.write_record([
            sc.tau.to_string(),
            sc.n.to_string(),
            sc.m.to_string(),
            sc.error_family.to_string(),
            sc.xi_effect.to_string(),
            cell.requested.to_string(),
            cell.completed.to_string(),
            cell.partial.to_string(),
            cell.rejection_rate.map_or(String::new(), |v| v.to_string()),
            cell.rejection_se.map_or(String::new(), |v| v.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Replicate-level rows (seed, λ̃, statistics) for every cell.
pub fn write_replicate_table(summary: &ExperimentSummary, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "cell", "replicate", "seed", "lambda_tilde", "rmise_total", "accuracy", "t_n", "p_value",
    ])?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for (c, cell) in summary.cells.iter().enumerate() {
        for r in &cell.replicates {
            let total = if r.rmise.is_empty() {
                String::new()
            } else {
                r.rmise.iter().sum::<f64>().to_string()
            };
            w.write_record([
                c.to_string(),
                r.index.to_string(),
                r.seed.to_string(),
                r.lambda_tilde.to_string(),
                total,
                opt(r.accuracy),
                opt(r.t_n),
                opt(r.p_value),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
