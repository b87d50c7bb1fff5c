use ndarray::{Array2, Zip};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::loss::{check_loss, prox_check};
use super::spectral::{solve_penalized_least_squares, GramSpectrum};
use super::subgroup::classify_subgroups;
use super::{AdmmConfig, GammaInit};
use crate::data::FunctionalDataset;
use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, RepresenterCoefficients};
use crate::linalg::cholesky_solve;
use crate::rng::stream_rng;
use crate::scalar::{norm2, Real};
use crate::smoothing::{default_bandwidth, smooth_indicator, smooth_indicator_deriv, SmoothingSpec};

/// Relative diagonal jitter added once to the Gram matrix.
pub const GRAM_JITTER: f64 = 1e-10;

const GN_MAX_ITER: usize = 20;
const GN_MAX_HALVINGS: usize = 20;
const ARMIJO_C1: f64 = 1e-4;

/// Iterates of one ADMM run. `d` is stored as a `(P × m)` matrix, row `k`
/// holding the kernel coefficients of component `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState<T> {
    pub u: Array2<T>,
    pub zeta: Array2<T>,
    pub varphi: Vec<T>,
    pub d: Array2<T>,
    pub gamma: Vec<T>,
    pub primal_norm: T,
    pub dual_norm: T,
    pub iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord<T> {
    pub primal_norm: T,
    pub dual_norm: T,
    /// Smoothed penalized check-loss objective after the iteration.
    pub objective: T,
    pub gamma_improved: bool,
}

/// Dataset-bound precomputations shared by every iteration.
#[derive(Debug, Clone)]
pub struct Problem<'a, T> {
    pub ds: &'a FunctionalDataset<T>,
    pub cfg: &'a AdmmConfig<T>,
    /// Gram matrix with the diagonal jitter applied.
    pub gram: Array2<T>,
    pub spectrum: GramSpectrum<T>,
    pub jitter: T,
    /// `None` for the null (β-only) model.
    pub smoothing: Option<SmoothingSpec<T>>,
}

impl<'a, T: Real> Problem<'a, T> {
    fn build(ds: &'a FunctionalDataset<T>, cfg: &'a AdmmConfig<T>, smoothing: Option<SmoothingSpec<T>>) -> Result<Self> {
        cfg.validate()?;
        let mut gram = gram_matrix(&cfg.kernel, ds.grid());
        let m = ds.m();
        let trace = (0..m).fold(T::zero(), |acc, j| acc + gram[(j, j)]);
        let jitter = T::lit(GRAM_JITTER) * trace / T::from_usize_lossy(m);
        for j in 0..m {
            gram[(j, j)] = gram[(j, j)] + jitter;
        }
        let spectrum = GramSpectrum::new(&gram);
        Ok(Problem {
            ds,
            cfg,
            gram,
            spectrum,
            jitter,
            smoothing,
        })
    }

    pub fn changeplane(ds: &'a FunctionalDataset<T>, cfg: &'a AdmmConfig<T>) -> Result<Self> {
        let gamma0 = initial_gamma(ds, cfg)?;
        let h = match cfg.h {
            Some(h) => h,
            None => {
                let idx = ds.grouping_index(&gamma0);
                let n = T::from_usize_lossy(idx.len());
                let mean = idx.iter().copied().sum::<T>() / n;
                let var = idx.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / (n - T::one()).max(T::one());
                let sd = var.sqrt();
                if !(sd > T::zero()) {
                    return Err(Error::DegenerateInput(
                        "grouping index has zero spread at the initial gamma; set the bandwidth explicitly".into(),
                    ));
                }
                default_bandwidth(ds.n().max(2), sd, cfg.h_const)
            }
        };
        Self::build(ds, cfg, Some(SmoothingSpec { h, c_h: cfg.h_const }))
    }

    pub fn null(ds: &'a FunctionalDataset<T>, cfg: &'a AdmmConfig<T>) -> Result<Self> {
        Self::build(ds, cfg, None)
    }

    pub fn n_components(&self) -> usize {
        match self.smoothing {
            Some(_) => self.ds.p() + self.ds.d(),
            None => self.ds.p(),
        }
    }

    /// Weight on `dᵀΩd` in the unnormalized subproblems: n·m·λ.
    pub fn penalty_weight(&self) -> T {
        T::from_usize_lossy(self.ds.n() * self.ds.m()) * self.cfg.lambda
    }

    fn design_with(&self, gamma: &[T], link: impl Fn(T) -> T) -> Array2<T> {
        let ds = self.ds;
        let p = ds.p();
        let mut w = Array2::zeros((ds.n(), self.n_components()));
        w.slice_mut(ndarray::s![.., ..p]).assign(ds.x());
        if self.smoothing.is_some() {
            let idx = ds.grouping_index(gamma);
            for i in 0..ds.n() {
                let g = link(idx[i]);
                for (l, &c) in ds.xtilde_cols().iter().enumerate() {
                    w[(i, p + l)] = ds.x()[(i, c)] * g;
                }
            }
        }
        w
    }

    /// Rows W_{i,γ} = (x_iᵀ, x̃_iᵀ G_h(z1_i + z2_iᵀγ)).
    pub fn design(&self, gamma: &[T]) -> Array2<T> {
        match self.smoothing {
            Some(sm) => self.design_with(gamma, |w| smooth_indicator(&sm, w)),
            None => self.design_with(gamma, |_| T::zero()),
        }
    }

    /// Rows with the hard indicator I(z1_i + z2_iᵀγ ≥ 0).
    pub fn hard_design(&self, gamma: &[T]) -> Array2<T> {
        self.design_with(gamma, |w| if w >= T::zero() { T::one() } else { T::zero() })
    }

    /// `(P × m)` component values α_k(s_j) = φ_k + (K d_k)_j.
    pub fn component_values(&self, varphi: &[T], d: &Array2<T>) -> Array2<T> {
        let mut out = d.dot(&self.gram);
        for (mut row, &phi) in out.rows_mut().into_iter().zip(varphi) {
            row.mapv_inplace(|v| v + phi);
        }
        out
    }

    /// Σ_k d_kᵀ K d_k.
    pub fn penalty(&self, d: &Array2<T>) -> T {
        let kd = d.dot(&self.gram);
        Zip::from(d).and(&kd).fold(T::zero(), |acc, &a, &b| acc + a * b)
    }

    /// (1/nm) Σ ρ_τ(y − fitted) + (λ/2) dᵀΩd.
    pub fn objective(&self, fitted: &Array2<T>, d: &Array2<T>) -> T {
        let tau = self.cfg.tau;
        let loss = Zip::from(self.ds.y())
            .and(fitted)
            .fold(T::zero(), |acc, &y, &f| acc + check_loss(y - f, tau));
        loss / T::from_usize_lossy(self.ds.n() * self.ds.m()) + self.cfg.lambda * self.penalty(d) / T::lit(2.0)
    }

    pub fn initial_state(&self, gamma: Vec<T>) -> AdmmState<T> {
        let (n, m) = self.ds.y().dim();
        let big_p = self.n_components();
        AdmmState {
            u: self.ds.y().clone(),
            zeta: Array2::zeros((n, m)),
            varphi: vec![T::zero(); big_p],
            d: Array2::zeros((big_p, m)),
            gamma,
            primal_norm: T::zero(),
            dual_norm: T::zero(),
            iter: 0,
        }
    }

    /// Σ ρ_τ(y − u) + (κ/2) Σ (u − fitted + ζ̃)².
    pub fn u_subobjective(&self, state: &AdmmState<T>, u: &Array2<T>, fitted: &Array2<T>) -> T {
        let (tau, kappa) = (self.cfg.tau, self.cfg.kappa);
        Zip::from(self.ds.y())
            .and(u)
            .and(fitted)
            .and(&state.zeta)
            .fold(T::zero(), |acc, &y, &u, &f, &z| {
                let r = u - f + z;
                acc + check_loss(y - u, tau) + kappa * r * r / T::lit(2.0)
            })
    }

    /// (κ/2) Σ (u − ψ(φ, d, γ) + ζ̃)² + (nmλ/2) dᵀΩd with γ taken from `state`.
    pub fn varphi_d_subobjective(&self, state: &AdmmState<T>, varphi: &[T], d: &Array2<T>) -> T {
        let fitted = self.design(&state.gamma).dot(&self.component_values(varphi, d));
        self.quadratic_misfit(state, &fitted) + self.penalty_weight() * self.penalty(d) / T::lit(2.0)
    }

    /// (κ/2) Σ (u − ψ(φ, d, γ) + ζ̃)² with (φ, d) taken from `state`.
    pub fn gamma_subobjective(&self, state: &AdmmState<T>, gamma: &[T]) -> T {
        let fitted = self.design(gamma).dot(&self.component_values(&state.varphi, &state.d));
        self.quadratic_misfit(state, &fitted)
    }

    fn quadratic_misfit(&self, state: &AdmmState<T>, fitted: &Array2<T>) -> T {
        let s = Zip::from(&state.u)
            .and(fitted)
            .and(&state.zeta)
            .fold(T::zero(), |acc, &u, &f, &z| {
                let r = u - f + z;
                acc + r * r
            });
        self.cfg.kappa * s / T::lit(2.0)
    }
}

fn initial_gamma<T: Real>(ds: &FunctionalDataset<T>, cfg: &AdmmConfig<T>) -> Result<Vec<T>> {
    match &cfg.gamma_init {
        GammaInit::Zero => Ok(vec![T::zero(); ds.q()]),
        GammaInit::Values(v) if v.len() == ds.q() => Ok(v.clone()),
        GammaInit::Values(v) => Err(Error::LengthMismatch {
            expected: ds.q(),
            found: v.len(),
        }),
    }
}

/// u_ij = y_ij − prox_τ,κ(y_ij − fitted_ij + ζ̃_ij).
pub fn update_u<T: Real>(state: &AdmmState<T>, fitted: &Array2<T>, y: &Array2<T>, cfg: &AdmmConfig<T>) -> Array2<T> {
    let mut u = y.clone();
    Zip::from(&mut u)
        .and(fitted)
        .and(&state.zeta)
        .for_each(|u, &f, &z| *u = *u - prox_check(cfg.tau, cfg.kappa, *u - f + z));
    u
}

/// Exact joint minimizer of the (φ, d) subproblem at the current γ.
pub fn solve_varphi_d<T: Real>(problem: &Problem<'_, T>, state: &AdmmState<T>) -> Result<(Vec<T>, Array2<T>)> {
    let design = problem.design(&state.gamma);
    let target = &state.u + &state.zeta;
    solve_penalized_least_squares(
        &design,
        &target,
        &problem.spectrum,
        problem.cfg.kappa,
        problem.penalty_weight(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaStep<T> {
    pub gamma: Vec<T>,
    pub improved: bool,
    pub objective_before: T,
    pub objective_after: T,
}

/// Damped Gauss–Newton on the γ subproblem with Armijo backtracking. Never
/// increases the subobjective; returns the input γ when no decrease is found.
///
/// One step moves the grouping index of any subject by at most the current
/// spread (standard deviation) of the index. Candidates that leave d or fewer
/// subjects on either side of the hyperplane are rejected, since the θ block
/// of the design is then collinear with the β block.
pub fn gamma_step<T: Real>(problem: &Problem<'_, T>, state: &AdmmState<T>) -> GammaStep<T> {
    let unchanged = |obj: T| GammaStep {
        gamma: state.gamma.clone(),
        improved: false,
        objective_before: obj,
        objective_after: obj,
    };
    let Some(sm) = problem.smoothing else {
        return unchanged(T::zero());
    };
    let ds = problem.ds;
    let (n, m) = ds.y().dim();
    let p = ds.p();
    let q = ds.q();
    let kappa = problem.cfg.kappa;
    let comp = problem.component_values(&state.varphi, &state.d);

    // Per-subject aggregates of the residual r_i(g) = t_i − base_i − g θ_i.
    let mut quad = vec![T::zero(); n];
    let mut cross = vec![T::zero(); n];
    let mut rss = vec![T::zero(); n];
    let mut base = vec![T::zero(); m];
    let mut theta = vec![T::zero(); m];
    for i in 0..n {
        base.iter_mut().for_each(|v| *v = T::zero());
        theta.iter_mut().for_each(|v| *v = T::zero());
        for k in 0..p {
            let xk = ds.x()[(i, k)];
            for j in 0..m {
                base[j] = base[j] + xk * comp[(k, j)];
            }
        }
        for (l, &c) in ds.xtilde_cols().iter().enumerate() {
            let xl = ds.x()[(i, c)];
            for j in 0..m {
                theta[j] = theta[j] + xl * comp[(p + l, j)];
            }
        }
        for j in 0..m {
            let r = state.u[(i, j)] + state.zeta[(i, j)] - base[j];
            quad[i] = quad[i] + theta[j] * theta[j];
            cross[i] = cross[i] + theta[j] * r;
            rss[i] = rss[i] + r * r;
        }
    }
    let objective = |gamma: &[T]| -> T {
        let idx = ds.grouping_index(gamma);
        let s = (0..n).fold(T::zero(), |acc, i| {
            let g = smooth_indicator(&sm, idx[i]);
            acc + rss[i] - T::lit(2.0) * g * cross[i] + g * g * quad[i]
        });
        kappa * s / T::lit(2.0)
    };

    let min_side = ds.d() + 1;
    let identified = |gamma: &[T]| {
        let on = ds.grouping_index(gamma).iter().filter(|&&v| v >= T::zero()).count();
        on >= min_side && n - on >= min_side
    };
    let enforce = identified(&state.gamma);

    let f0 = objective(&state.gamma);
    let mut gamma = state.gamma.clone();
    let mut f = f0;
    for _ in 0..GN_MAX_ITER {
        let idx = ds.grouping_index(&gamma);
        let nn = T::from_usize_lossy(n);
        let mean = idx.iter().fold(T::zero(), |a, &v| a + v) / nn;
        let spread = (idx.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean)) / nn).sqrt();
        let mut jtj = Array2::<T>::zeros((q, q));
        let mut rhs = vec![T::zero(); q];
        for i in 0..n {
            let g = smooth_indicator(&sm, idx[i]);
            let gp = smooth_indicator_deriv(&sm, idx[i]);
            let wgt = gp * gp * quad[i];
            let rr = gp * (cross[i] - g * quad[i]);
            let z = ds.z2().row(i);
            for a in 0..q {
                rhs[a] = rhs[a] + rr * z[a];
                for b in 0..q {
                    jtj[(a, b)] = jtj[(a, b)] + wgt * z[a] * z[b];
                }
            }
        }
        let tr = (0..q).fold(T::zero(), |acc, a| acc + jtj[(a, a)]);
        if !(tr > T::zero()) {
            break;
        }
        let ridge = T::lit(1e-10) * tr / T::from_usize_lossy(q);
        for a in 0..q {
            jtj[(a, a)] = jtj[(a, a)] + ridge;
        }
        let Ok(mut delta) = cholesky_solve(&jtj, &rhs) else {
            break;
        };
        let reach = (0..n).fold(T::zero(), |acc, i| {
            let z = ds.z2().row(i);
            acc.max((0..q).fold(T::zero(), |a, k| a + z[k] * delta[k]).abs())
        });
        if spread > T::zero() && reach > spread {
            let shrink = spread / reach;
            delta.iter_mut().for_each(|d| *d = *d * shrink);
        }
        // ∇S = −κ · rhs, so the directional derivative along δ is −κ rhsᵀδ.
        let slope = -kappa * rhs.iter().zip(&delta).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        if !(slope < T::zero()) {
            break;
        }
        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..=GN_MAX_HALVINGS {
            let cand: Vec<T> = gamma.iter().zip(&delta).map(|(&g, &d)| g + alpha * d).collect();
            let fc = objective(&cand);
            if fc <= f + T::lit(ARMIJO_C1) * alpha * slope && (!enforce || identified(&cand)) {
                accepted = Some((cand, fc));
                break;
            }
            alpha = alpha / T::lit(2.0);
        }
        let Some((cand, fc)) = accepted else {
            break;
        };
        let step = alpha * norm2(&delta);
        let f_prev = f;
        gamma = cand;
        f = fc;
        if step <= T::lit(1e-10) * (T::one() + norm2(&gamma)) || f_prev - f <= T::lit(1e-14) * f_prev.abs() {
            break;
        }
    }
    if f < f0 {
        GammaStep {
            gamma,
            improved: true,
            objective_before: f0,
            objective_after: f,
        }
    } else {
        unchanged(f0)
    }
}

/// ζ̃ ← ζ̃ + u − fitted.
pub fn update_zeta<T: Real>(state: &AdmmState<T>, fitted: &Array2<T>) -> Array2<T> {
    &state.zeta + &(&state.u - fitted)
}

/// Primal ‖u − ψ(φ, d, γ)‖₂ and dual κ ‖ψ(φ, d, γ) − ψ_prev‖₂, where ψ is
/// the fitted surface at the state's parameters and `prev_fitted` the one of
/// the previous iteration.
pub fn residual_norms<T: Real>(problem: &Problem<'_, T>, state: &AdmmState<T>, prev_fitted: &Array2<T>) -> (T, T) {
    let fitted = problem.design(&state.gamma).dot(&problem.component_values(&state.varphi, &state.d));
    residual_norms_with(problem, state, &fitted, prev_fitted)
}

fn residual_norms_with<T: Real>(
    problem: &Problem<'_, T>,
    state: &AdmmState<T>,
    fitted: &Array2<T>,
    prev_fitted: &Array2<T>,
) -> (T, T) {
    let sq = |a: &Array2<T>, b: &Array2<T>| {
        Zip::from(a)
            .and(b)
            .fold(T::zero(), |acc, &x, &y| acc + (x - y) * (x - y))
            .sqrt()
    };
    (sq(&state.u, fitted), problem.cfg.kappa * sq(fitted, prev_fitted))
}

struct RunOutput<T> {
    state: AdmmState<T>,
    trace: Vec<IterationRecord<T>>,
    converged: bool,
}

fn run_admm<T: Real>(problem: &Problem<'_, T>, gamma0: Vec<T>) -> Result<RunOutput<T>> {
    let cfg = problem.cfg;
    let y = problem.ds.y();
    let mut state = problem.initial_state(gamma0);
    let mut fitted = Array2::zeros(y.dim());
    let mut trace = Vec::new();
    let mut converged = false;
    for it in 0..cfg.max_iter {
        state.u = update_u(&state, &fitted, y, cfg);
        let (varphi, d) = solve_varphi_d(problem, &state)?;
        state.varphi = varphi;
        state.d = d;
        let step = gamma_step(problem, &state);
        state.gamma = step.gamma;
        let prev_fitted = std::mem::replace(
            &mut fitted,
            problem.design(&state.gamma).dot(&problem.component_values(&state.varphi, &state.d)),
        );
        state.zeta = update_zeta(&state, &fitted);
        let (primal, dual) = residual_norms_with(problem, &state, &fitted, &prev_fitted);
        state.primal_norm = primal;
        state.dual_norm = dual;
        state.iter = it + 1;
        trace.push(IterationRecord {
            primal_norm: primal,
            dual_norm: dual,
            objective: problem.objective(&fitted, &state.d),
            gamma_improved: step.improved,
        });
        if !(primal.is_finite() && dual.is_finite()) {
            return Err(Error::NumericalFailure {
                context: format!("ADMM iteration {} produced non-finite residuals", it + 1),
                condition: f64::NAN,
            });
        }
        if primal < cfg.tol && dual < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(RunOutput {
        state,
        trace,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ChangePlaneFit<T> {
    pub coef: RepresenterCoefficients<T>,
    pub gamma: Vec<T>,
    /// I(z1_i + z2_iᵀγ ≥ 0) at the final γ.
    pub labels: Vec<bool>,
    /// Penalized check loss with the hard indicator.
    pub objective: T,
    pub trace: Vec<IterationRecord<T>>,
    pub converged: bool,
    pub tau: T,
    pub lambda: T,
    pub bandwidth: T,
    pub jitter: T,
    /// Index of the retained start and the hard objective of every start
    /// (`None` for a start that failed numerically).
    pub start: usize,
    pub start_objectives: Vec<Option<T>>,
    pub start_labels: Vec<Vec<bool>>,
}

impl<T: Real> ChangePlaneFit<T> {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Fits the functional change-plane quantile regression model.
pub fn fit_changeplane<T: Real>(ds: &FunctionalDataset<T>, cfg: &AdmmConfig<T>) -> Result<ChangePlaneFit<T>> {
    let problem = Problem::changeplane(ds, cfg)?;
    let base = initial_gamma(ds, cfg)?;
    let mut best: Option<(usize, RunOutput<T>, T)> = None;
    let mut start_objectives = Vec::with_capacity(cfg.multistart);
    let mut start_labels = Vec::with_capacity(cfg.multistart);
    let mut first_error = None;
    for start in 0..cfg.multistart {
        let gamma0: Vec<T> = if start == 0 {
            base.clone()
        } else {
            let mut rng = stream_rng(cfg.seed, start as u64);
            base.iter()
                .map(|&g| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    g + T::lit(e)
                })
                .collect()
        };
        let run = match run_admm(&problem, gamma0) {
            Ok(run) => run,
            Err(e) if cfg.multistart > 1 => {
                log::debug!("start {start} failed: {e}");
                start_objectives.push(None);
                start_labels.push(Vec::new());
                first_error.get_or_insert(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let comp = problem.component_values(&run.state.varphi, &run.state.d);
        let hard = problem.hard_design(&run.state.gamma).dot(&comp);
        let obj = problem.objective(&hard, &run.state.d);
        start_objectives.push(Some(obj));
        start_labels.push(classify_subgroups(ds.z1(), ds.z2(), &run.state.gamma));
        if best.as_ref().is_none_or(|(_, _, b)| obj < *b) {
            best = Some((start, run, obj));
        }
    }
    let Some((start, run, objective)) = best else {
        return Err(first_error.expect("every failed start records its error"));
    };
    let coef = RepresenterCoefficients::from_stacked(ds.p(), &run.state.varphi, &run.state.d, ds.grid());
    Ok(ChangePlaneFit {
        coef,
        labels: classify_subgroups(ds.z1(), ds.z2(), &run.state.gamma),
        gamma: run.state.gamma,
        objective,
        trace: run.trace,
        converged: run.converged,
        tau: cfg.tau,
        lambda: cfg.lambda,
        bandwidth: problem.smoothing.expect("change-plane problem").h,
        jitter: problem.jitter,
        start,
        start_objectives,
        start_labels,
    })
}

/// Fit under θ ≡ 0: only β is estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NullFit<T> {
    pub coef: RepresenterCoefficients<T>,
    /// x_iᵀβ̂(s_j), `n × m`.
    #[serde(with = "crate::serde_matrix")]
    pub fitted: Array2<T>,
    pub objective: T,
    pub trace: Vec<IterationRecord<T>>,
    pub converged: bool,
    pub tau: T,
    pub lambda: T,
    pub jitter: T,
}

pub fn fit_null<T: Real>(ds: &FunctionalDataset<T>, cfg: &AdmmConfig<T>) -> Result<NullFit<T>> {
    let problem = Problem::null(ds, cfg)?;
    let run = run_admm(&problem, vec![T::zero(); ds.q()])?;
    let comp = problem.component_values(&run.state.varphi, &run.state.d);
    let fitted = ds.x().dot(&comp);
    let objective = problem.objective(&fitted, &run.state.d);
    let coef = RepresenterCoefficients::from_stacked(ds.p(), &run.state.varphi, &run.state.d, ds.grid());
    Ok(NullFit {
        coef,
        fitted,
        objective,
        trace: run.trace,
        converged: run.converged,
        tau: cfg.tau,
        lambda: cfg.lambda,
        jitter: problem.jitter,
    })
}
