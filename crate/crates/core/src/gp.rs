//! Exact GP regression with an ARD Matérn-3/2 kernel, EI/UCB acquisition
//! and query selection over a continuous box or an enumerated grid.
//!
//! Inputs live in the unit cube and outputs are expected to be normalized.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::grid::GridSpace;
use crate::kernels::CholFactor;
use crate::optim::{direct_maximize, nelder_mead_maximize, nelder_mead_minimize, DirectOptions, NelderMeadOptions};

/// Hyperparameters are kept inside `[HYPER_MIN, HYPER_MAX]`.
pub const HYPER_MIN: f64 = 1e-3;
pub const HYPER_MAX: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct GpHyper {
    pub lengthscales: Vec<f64>,
    pub signal_var: f64,
    pub noise_prec: f64,
}

impl GpHyper {
    pub fn unit(dims: usize) -> Self {
        GpHyper { lengthscales: vec![1.0; dims], signal_var: 1.0, noise_prec: 1.0 }
    }

    fn to_log(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.lengthscales.iter().map(|l| l.ln()).collect();
        v.push(self.signal_var.ln());
        v.push(self.noise_prec.ln());
        v
    }

    fn from_log(v: &[f64]) -> Self {
        let d = v.len() - 2;
        let c = |x: f64| x.exp().clamp(HYPER_MIN, HYPER_MAX);
        GpHyper { lengthscales: v[..d].iter().map(|&x| c(x)).collect(), signal_var: c(v[d]), noise_prec: c(v[d + 1]) }
    }

    fn validate(&self, dims: usize) -> Result<()> {
        if self.lengthscales.len() != dims {
            return Err(Error::invalid(format!("expected {dims} lengthscales, got {}", self.lengthscales.len())));
        }
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !self.lengthscales.iter().all(|&l| ok(l)) || !ok(self.signal_var) || !ok(self.noise_prec) {
            return Err(Error::invalid("GP hyperparameters must be positive and finite"));
        }
        Ok(())
    }
}

fn matern32_ard(a: &[f64], b: &[f64], h: &GpHyper) -> f64 {
    let r2: f64 = a.iter().zip(b).zip(&h.lengthscales).map(|((x, y), l)| ((x - y) / l).powi(2)).sum();
    let s = (3.0 * r2).sqrt();
    h.signal_var * (1.0 + s) * (-s).exp()
}

/// A GP conditioned on training data, immutable after construction.
#[derive(Debug, Clone)]
pub struct GpModel {
    inputs: Vec<Vec<f64>>,
    y: DVector<f64>,
    hyper: GpHyper,
    chol: CholFactor,
    alpha: DVector<f64>,
}

impl GpModel {
    pub fn new(inputs: Vec<Vec<f64>>, y: Vec<f64>, hyper: GpHyper) -> Result<Self> {
        let n = inputs.len();
        if n == 0 || y.len() != n {
            return Err(Error::invalid(format!("GP needs matching non-empty inputs and outputs ({n} vs {})", y.len())));
        }
        let dims = inputs[0].len();
        if inputs.iter().any(|x| x.len() != dims) {
            return Err(Error::invalid("GP inputs have inconsistent dimension"));
        }
        hyper.validate(dims)?;
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = matern32_ard(&inputs[i], &inputs[j], &hyper);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
            k[(i, i)] += 1.0 / hyper.noise_prec;
        }
        let chol = CholFactor::new(k)?;
        let y = DVector::from_vec(y);
        let alpha = chol.solve(&y);
        Ok(GpModel { inputs, y, hyper, chol, alpha })
    }

    pub fn hyper(&self) -> &GpHyper {
        &self.hyper
    }

    pub fn dims(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.len() as f64;
        -0.5 * self.y.dot(&self.alpha) - 0.5 * self.chol.log_det() - 0.5 * n * (2.0 * PI).ln()
    }

    /// Predictive mean and standard deviation of the latent function.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        let kx = DVector::from_iterator(self.len(), self.inputs.iter().map(|xi| matern32_ard(x, xi, &self.hyper)));
        let mean = kx.dot(&self.alpha);
        let v = self.chol.solve_lower(&kx);
        let var = (self.hyper.signal_var - v.norm_squared()).max(0.0);
        (mean, var.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpFitOptions {
    /// Random restarts in addition to the unit starting point.
    pub restarts: usize,
    pub nelder_mead: NelderMeadOptions,
}

impl Default for GpFitOptions {
    fn default() -> Self {
        GpFitOptions {
            restarts: 5,
            nelder_mead: NelderMeadOptions { max_iters: 300, initial_edge: 0.5, ..Default::default() },
        }
    }
}

/// Maximizes the log marginal likelihood over log-hyperparameters with
/// Nelder–Mead from the unit point and `opts.restarts` random starts. Falls
/// back to unit hyperparameters if no start yields a factorizable model.
pub fn fit_hyperparameters<R: Rng + ?Sized>(
    inputs: &[Vec<f64>],
    y: &[f64],
    opts: &GpFitOptions,
    rng: &mut R,
) -> Result<GpModel> {
    if inputs.len() < 2 {
        return Err(Error::invalid("hyperparameter fitting needs at least two observations"));
    }
    let dims = inputs[0].len();
    let (lo, hi) = (HYPER_MIN.ln(), HYPER_MAX.ln());
    let bounds = vec![(lo, hi); dims + 2];
    let neg_lml = |v: &[f64]| match GpModel::new(inputs.to_vec(), y.to_vec(), GpHyper::from_log(v)) {
        Ok(m) => -m.log_marginal_likelihood(),
        Err(_) => f64::INFINITY,
    };

    let mut starts = vec![GpHyper::unit(dims).to_log()];
    for _ in 0..opts.restarts {
        let mut s: Vec<f64> = (0..dims).map(|_| rng.random_range(0.05f64.ln()..2f64.ln())).collect();
        s.push(rng.random_range(0.1f64.ln()..10f64.ln()));
        s.push(rng.random_range(1f64.ln()..hi));
        starts.push(s);
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &starts {
        let r = nelder_mead_minimize(neg_lml, s, &bounds, &opts.nelder_mead);
        if r.value.is_finite() && best.as_ref().is_none_or(|(_, v)| r.value < *v) {
            best = Some((r.x, r.value));
        }
    }
    match best {
        Some((x, _)) => GpModel::new(inputs.to_vec(), y.to_vec(), GpHyper::from_log(&x)),
        None => {
            log::warn!("GP hyperparameter fit failed from every start; using unit hyperparameters");
            GpModel::new(inputs.to_vec(), y.to_vec(), GpHyper::unit(dims))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EiVariant {
    /// `sigma * phi(d / sigma) + |d| * Phi(d / sigma)`.
    #[default]
    Verbatim,
    /// `d * Phi(d / sigma) + sigma * phi(d / sigma)`.
    Classical,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Expected improvement over `f_best` for a maximization problem.
pub fn ei(mu: f64, sigma: f64, f_best: f64, variant: EiVariant) -> f64 {
    let delta = mu - f_best;
    if !(sigma > 0.0) {
        return delta.max(0.0);
    }
    let n = std_normal();
    let z = delta / sigma;
    match variant {
        EiVariant::Verbatim => sigma * n.pdf(z) + delta.abs() * n.cdf(z),
        EiVariant::Classical => delta * n.cdf(z) + sigma * n.pdf(z),
    }
}

pub fn ucb(mu: f64, sigma: f64, beta: f64) -> f64 {
    mu + beta * sigma
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Acquisition {
    Ei { f_best: f64, variant: EiVariant },
    Ucb { beta: f64 },
}

impl Acquisition {
    pub fn score(&self, model: &GpModel, x: &[f64]) -> f64 {
        let (mu, sigma) = model.posterior(x);
        match *self {
            Acquisition::Ei { f_best, variant } => ei(mu, sigma, f_best, variant),
            Acquisition::Ucb { beta } => ucb(mu, sigma, beta),
        }
    }
}

/// Maximizes the acquisition over `bounds` with DIRECT on the unit cube,
/// polishes the incumbent with Nelder–Mead and returns the better point in
/// raw coordinates together with its acquisition value.
pub fn next_query_continuous(
    model: &GpModel,
    af: &Acquisition,
    bounds: &[(f64, f64)],
    direct: &DirectOptions,
    polish: &NelderMeadOptions,
) -> Result<(Vec<f64>, f64)> {
    if bounds.len() != model.dims() {
        return Err(Error::invalid(format!("{} bounds for a {}-D model", bounds.len(), model.dims())));
    }
    let score = |u: &[f64]| af.score(model, u);
    let (xd, vd) = direct_maximize(score, bounds.len(), direct);
    let nm = nelder_mead_maximize(score, &xd, &vec![(0.0, 1.0); bounds.len()], polish);
    let (u, v) = if nm.value > vd { (nm.x, nm.value) } else { (xd, vd) };
    let x = u.iter().zip(bounds).map(|(t, &(lo, hi))| (lo + t * (hi - lo)).clamp(lo, hi)).collect();
    Ok((x, v))
}

/// Best unobserved grid entry (flat index) under the acquisition; ties go to
/// the lowest flat index.
pub fn next_query_grid(
    model: &GpModel,
    af: &Acquisition,
    grid: &GridSpace,
    observed: &[usize],
) -> Result<(usize, f64)> {
    if grid.dims() != model.dims() {
        return Err(Error::invalid(format!("{}-D grid for a {}-D model", grid.dims(), model.dims())));
    }
    let mut seen = vec![false; grid.len()];
    for &i in observed {
        if i >= grid.len() {
            return Err(Error::IndexOutOfRange { index: vec![i], shape: grid.shape().to_vec() });
        }
        seen[i] = true;
    }
    let unit = grid.all_unit_coords();
    let shape = grid.shape();
    let mut ix = vec![0usize; grid.dims()];
    let mut u = vec![0.0; grid.dims()];
    let mut best: Option<(usize, f64)> = None;
    for (flat, taken) in seen.into_iter().enumerate() {
        if !taken {
            for (d, c) in unit.iter().enumerate() {
                u[d] = c[ix[d]];
            }
            let s = af.score(model, &u);
            let s = if s.is_nan() { f64::NEG_INFINITY } else { s };
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((flat, s));
            }
        }
        for d in (0..ix.len()).rev() {
            ix[d] += 1;
            if ix[d] < shape[d] {
                break;
            }
            ix[d] = 0;
        }
    }
    best.ok_or(Error::GridExhausted)
}
