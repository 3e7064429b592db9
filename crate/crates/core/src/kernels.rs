//! One-dimensional stationary correlation functions, Cholesky helpers and
//! the log-normal lengthscale hyperprior.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diagonal jitter added to every Gram matrix before factorization.
pub const BASE_JITTER: f64 = 1e-6;
/// Largest jitter tried before giving up.
pub const MAX_JITTER: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    #[serde(alias = "matern32")]
    Matern32,
    #[serde(alias = "se")]
    SquaredExponential,
}

/// A unit-variance kernel with a single lengthscale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscale: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscale: f64) -> Result<Self> {
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(Error::invalid(format!("lengthscale must be positive, got {lengthscale}")));
        }
        Ok(KernelSpec { family, lengthscale })
    }

    /// Correlation at lag `dist >= 0`.
    pub fn value(&self, dist: f64) -> f64 {
        let r = dist.abs() / self.lengthscale;
        match self.family {
            KernelFamily::Matern32 => {
                let s = 3f64.sqrt() * r;
                (1.0 + s) * (-s).exp()
            }
            KernelFamily::SquaredExponential => (-0.5 * r * r).exp(),
        }
    }
}

/// Correlation matrix over a set of 1-D coordinates, without jitter.
pub fn gram_matrix(spec: &KernelSpec, coords: &[f64]) -> DMatrix<f64> {
    let m = coords.len();
    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        k[(i, i)] = 1.0;
        for j in 0..i {
            let v = spec.value(coords[i] - coords[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Factors the jittered Gram matrix `K + jitter * I`, escalating the jitter
/// by 10x from [`BASE_JITTER`] up to [`MAX_JITTER`].
pub fn factor_gram(spec: &KernelSpec, coords: &[f64]) -> Result<CholFactor> {
    CholFactor::with_jitter(gram_matrix(spec, coords), BASE_JITTER)
}

/// Lower Cholesky factor `L` with `L L^T = A` together with `log det A`.
#[derive(Debug, Clone)]
pub struct CholFactor {
    l: DMatrix<f64>,
    log_det: f64,
    jitter: f64,
}

impl CholFactor {
    /// Factors `a` as is.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        Self::factor(a, 0.0)
    }

    /// Adds `start` to the diagonal and factors, retrying with 10x larger
    /// jitter until [`MAX_JITTER`] is exceeded.
    pub fn with_jitter(a: DMatrix<f64>, start: f64) -> Result<Self> {
        let mut jitter = start;
        loop {
            let mut aj = a.clone();
            for i in 0..aj.nrows() {
                aj[(i, i)] += jitter;
            }
            match Self::factor(aj, jitter) {
                Ok(c) => return Ok(c),
                Err(e) => {
                    jitter = if jitter == 0.0 { BASE_JITTER } else { jitter * 10.0 };
                    if jitter > MAX_JITTER * (1.0 + 1e-9) {
                        return Err(e);
                    }
                }
            }
        }
    }

    /// Plain factorization, falling back to escalating jitter on failure.
    pub fn robust(a: DMatrix<f64>) -> Result<Self> {
        Self::with_jitter(a, 0.0)
    }

    fn factor(a: DMatrix<f64>, jitter: f64) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::invalid("Cholesky of a non-square matrix"));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite { jitter });
        }
        let chol = a.cholesky().ok_or(Error::NotPositiveDefinite { jitter })?;
        let l = chol.unpack();
        let mut log_det = 0.0;
        for i in 0..l.nrows() {
            let d = l[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { jitter });
            }
            log_det += d.ln();
        }
        Ok(CholFactor { l, log_det: 2.0 * log_det, jitter })
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// `log det` of the factored (jittered) matrix.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Jitter that was added to the diagonal before factoring.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `L^{-1} b`
    pub fn solve_lower(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.l.solve_lower_triangular_mut(&mut x);
        x
    }

    /// `L^{-T} b`
    pub fn solve_upper_transpose(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.l.tr_solve_lower_triangular_mut(&mut x);
        x
    }

    /// `A^{-1} b`
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.solve_upper_transpose(&self.solve_lower(b))
    }

    /// `A^{-1}`, symmetrized.
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut linv = DMatrix::identity(n, n);
        self.l.solve_lower_triangular_mut(&mut linv);
        let mut inv = linv.tr_mul(&linv);
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                inv[(i, j)] = v;
                inv[(j, i)] = v;
            }
        }
        inv
    }

    /// `L L^T`
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.l * self.l.transpose()
    }
}

/// Gaussian prior on `log l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthscaleHyperprior {
    /// Mean of `log l`.
    pub mu: f64,
    /// Precision of `log l`.
    pub tau: f64,
}

impl Default for LengthscaleHyperprior {
    fn default() -> Self {
        LengthscaleHyperprior { mu: 0.5f64.ln(), tau: 2.0 }
    }
}

impl LengthscaleHyperprior {
    pub fn new(mu: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite() && mu.is_finite()) {
            return Err(Error::invalid(format!("hyperprior needs finite mu and tau > 0, got ({mu}, {tau})")));
        }
        Ok(LengthscaleHyperprior { mu, tau })
    }

    /// Log-density of `log l` (no Jacobian term).
    pub fn log_density(&self, lengthscale: f64) -> Result<f64> {
        if !(lengthscale > 0.0) {
            return Err(Error::invalid(format!("lengthscale must be positive, got {lengthscale}")));
        }
        Ok(self.log_density_log(lengthscale.ln()))
    }

    pub fn log_density_log(&self, log_l: f64) -> f64 {
        0.5 * (self.tau / (2.0 * PI)).ln() - 0.5 * self.tau * (log_l - self.mu).powi(2)
    }
}
