//! Reproducing kernels, Gram and penalty matrices, and representer-form
//! coefficient functions.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Gaussian,
    Laplace,
    Polynomial,
}

/// Kernel family plus its bandwidth/offset `sigma` and polynomial degree.
///
/// Textual form is `family:sigma[,degree]`, e.g. `gaussian:0.2` or
/// `polynomial:1,3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec<T> {
    family: KernelFamily,
    sigma: T,
    degree: u32,
}

impl<T: Real> KernelSpec<T> {
    pub fn gaussian(sigma: T) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, sigma, 1)
    }

    pub fn laplace(sigma: T) -> Result<Self> {
        Self::new(KernelFamily::Laplace, sigma, 1)
    }

    pub fn polynomial(sigma: T, degree: u32) -> Result<Self> {
        Self::new(KernelFamily::Polynomial, sigma, degree)
    }

    pub fn new(family: KernelFamily, sigma: T, degree: u32) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidConfig(format!("kernel sigma must be positive, got {sigma}")));
        }
        if degree == 0 {
            return Err(Error::InvalidConfig("polynomial degree must be >= 1".into()));
        }
        Ok(KernelSpec { family, sigma, degree })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }
    pub fn sigma(&self) -> T {
        self.sigma
    }
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// K(s, t).
    pub fn eval(&self, s: T, t: T) -> T {
        match self.family {
            KernelFamily::Gaussian => {
                let diff = s - t;
                (-(diff * diff) / (T::lit(2.0) * self.sigma * self.sigma)).exp()
            }
            KernelFamily::Laplace => (-(s - t).abs() / self.sigma).exp(),
            KernelFamily::Polynomial => (s * t + self.sigma * self.sigma).powi(self.degree as i32),
        }
    }

    /// (K(s, s_1), …, K(s, s_m)).
    pub fn section(&self, s: T, grid: &[T]) -> Vec<T> {
        grid.iter().map(|&t| self.eval(s, t)).collect()
    }
}

impl<T: Real> Default for KernelSpec<T> {
    fn default() -> Self {
        KernelSpec {
            family: KernelFamily::Gaussian,
            sigma: T::lit(0.2),
            degree: 1,
        }
    }
}

impl<T: Real> fmt::Display for KernelSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            KernelFamily::Gaussian => write!(f, "gaussian:{}", self.sigma),
            KernelFamily::Laplace => write!(f, "laplace:{}", self.sigma),
            KernelFamily::Polynomial => write!(f, "polynomial:{},{}", self.sigma, self.degree),
        }
    }
}

impl<T: Real> FromStr for KernelSpec<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse kernel `{s}`; expected family:sigma[,degree]"));
        let (family, params) = s.split_once(':').ok_or_else(bad)?;
        let mut parts = params.split(',');
        let sigma: T = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let degree = parts.next().map(|d| d.trim().parse::<u32>()).transpose().map_err(|_| bad())?;
        if parts.next().is_some() {
            return Err(bad());
        }
        match (family.trim().to_ascii_lowercase().as_str(), degree) {
            ("gaussian", None) => Self::gaussian(sigma),
            ("laplace", None) => Self::laplace(sigma),
            ("polynomial", Some(d)) => Self::polynomial(sigma, d),
            _ => Err(bad()),
        }
    }
}

impl<T: Real> Serialize for KernelSpec<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de, T: Real> Deserialize<'de> for KernelSpec<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Entry (j, l) = K(s_j, s_l).
pub fn gram_matrix<T: Real>(spec: &KernelSpec<T>, grid: &[T]) -> Array2<T> {
    let m = grid.len();
    let mut g = Array2::zeros((m, m));
    for j in 0..m {
        for l in j..m {
            let v = spec.eval(grid[j], grid[l]);
            g[(j, l)] = v;
            g[(l, j)] = v;
        }
    }
    g
}

/// Ω = I_{p+d} ⊗ K: block diagonal with `p + d` copies of the Gram matrix.
pub fn penalty_matrix<T: Real>(gram: &Array2<T>, p: usize, d: usize) -> Array2<T> {
    let m = gram.nrows();
    let blocks = p + d;
    let mut omega = Array2::zeros((blocks * m, blocks * m));
    for k in 0..blocks {
        omega
            .slice_mut(ndarray::s![k * m..(k + 1) * m, k * m..(k + 1) * m])
            .assign(gram);
    }
    omega
}

/// Finite representer form of the coefficient functions:
/// β_k(s) = ξ_k + Σ_j b_kj K(s, s_j) and θ_l(s) = ν_l + Σ_j c_lj K(s, s_j).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RepresenterCoefficients<T> {
    pub xi: Vec<T>,
    pub nu: Vec<T>,
    #[serde(with = "crate::serde_matrix")]
    pub b: Array2<T>,
    #[serde(with = "crate::serde_matrix")]
    pub c: Array2<T>,
    pub grid: Vec<T>,
}

impl<T: Real> RepresenterCoefficients<T> {
    pub fn zeros(p: usize, d: usize, grid: &[T]) -> Self {
        let m = grid.len();
        RepresenterCoefficients {
            xi: vec![T::zero(); p],
            nu: vec![T::zero(); d],
            b: Array2::zeros((p, m)),
            c: Array2::zeros((d, m)),
            grid: grid.to_vec(),
        }
    }

    pub fn p(&self) -> usize {
        self.xi.len()
    }

    pub fn d(&self) -> usize {
        self.nu.len()
    }

    /// Builds the record from stacked intercepts (ξ, ν) and a
    /// `(p + d) × m` kernel-coefficient matrix.
    pub fn from_stacked(p: usize, varphi: &[T], dmat: &Array2<T>, grid: &[T]) -> Self {
        let d = varphi.len() - p;
        RepresenterCoefficients {
            xi: varphi[..p].to_vec(),
            nu: varphi[p..].to_vec(),
            b: dmat.slice(ndarray::s![..p, ..]).to_owned(),
            c: dmat.slice(ndarray::s![p..p + d, ..]).to_owned(),
            grid: grid.to_vec(),
        }
    }

    /// (β_1(s), …, β_p(s), θ_1(s), …, θ_d(s)).
    pub fn evaluate(&self, spec: &KernelSpec<T>, s: T) -> Vec<T> {
        let ks = spec.section(s, &self.grid);
        let contract = |row: ndarray::ArrayView1<T>| row.iter().zip(&ks).fold(T::zero(), |a, (&c, &k)| a + c * k);
        let beta = self.xi.iter().zip(self.b.rows()).map(|(&xi, row)| xi + contract(row));
        let theta = self.nu.iter().zip(self.c.rows()).map(|(&nu, row)| nu + contract(row));
        beta.chain(theta).collect()
    }

    /// `(p + d) × m` matrix of component values at the anchor grid.
    pub fn values_on_grid(&self, gram: &Array2<T>) -> Array2<T> {
        let p = self.p();
        let m = self.grid.len();
        let mut out = Array2::zeros((p + self.d(), m));
        for (k, (icpt, row)) in self
            .xi
            .iter()
            .zip(self.b.rows())
            .chain(self.nu.iter().zip(self.c.rows()))
            .enumerate()
        {
            for j in 0..m {
                out[(k, j)] = *icpt + row.iter().zip(gram.column(j)).fold(T::zero(), |a, (&c, &g)| a + c * g);
            }
        }
        out
    }

    /// The β-only restriction (used for null-model fits).
    pub fn beta_only(&self) -> Self {
        RepresenterCoefficients {
            nu: Vec::new(),
            c: Array2::zeros((0, self.grid.len())),
            ..self.clone()
        }
    }
}

impl<T: Real> std::ops::Add for &RepresenterCoefficients<T> {
    type Output = RepresenterCoefficients<T>;

    fn add(self, rhs: Self) -> RepresenterCoefficients<T> {
        assert_eq!(self.grid, rhs.grid, "coefficient records on different grids");
        RepresenterCoefficients {
            xi: self.xi.iter().zip(&rhs.xi).map(|(&a, &b)| a + b).collect(),
            nu: self.nu.iter().zip(&rhs.nu).map(|(&a, &b)| a + b).collect(),
            b: &self.b + &rhs.b,
            c: &self.c + &rhs.c,
            grid: self.grid.clone(),
        }
    }
}
