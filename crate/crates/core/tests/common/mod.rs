//! Independent dense reference computations shared by the integration and
//! acceptance tests. Nothing here goes through the library's Cholesky or
//! sufficient-statistics code paths.

#![allow(dead_code)]

use bktf::bktf::{BktfConfig, BktfModel, CpState, TrainingData};
use bktf::kernels::BASE_JITTER;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Matérn-3/2 correlation matrix plus the library's base jitter.
pub fn matern_gram(coords: &[f64], l: f64) -> DMatrix<f64> {
    let m = coords.len();
    DMatrix::from_fn(m, m, |i, j| {
        let s = 3f64.sqrt() * (coords[i] - coords[j]).abs() / l;
        (1.0 + s) * (-s).exp() + if i == j { BASE_JITTER } else { 0.0 }
    })
}

/// GP posterior of the latent vector `g ~ N(0, K)` observed as
/// `y_i = g[idx_i] + N(0, 1/tau)`, via explicit matrix inverses.
pub fn gp_posterior(k: &DMatrix<f64>, idx: &[usize], y: &[f64], tau: f64) -> (DVector<f64>, DMatrix<f64>) {
    let n = idx.len();
    let m = k.nrows();
    let kxx = DMatrix::from_fn(n, n, |i, j| k[(idx[i], idx[j])] + if i == j { 1.0 / tau } else { 0.0 });
    let kgx = DMatrix::from_fn(m, n, |i, j| k[(i, idx[j])]);
    let inv = kxx.try_inverse().expect("invertible");
    let mean = &kgx * &inv * DVector::from_row_slice(y);
    let cov = k - &kgx * &inv * kgx.transpose();
    (mean, cov)
}

/// `-1/2 y^T S^{-1} y - 1/2 log det S` with `S = H K H^T + I / tau`, where row
/// `i` of `H` is `w_i e_{j_i}^T`.
pub fn dense_collapsed_loglik(k: &DMatrix<f64>, j: &[usize], w: &[f64], y: &[f64], tau: f64) -> f64 {
    let n = j.len();
    let s = DMatrix::from_fn(n, n, |p, q| w[p] * w[q] * k[(j[p], j[q])] + if p == q { 1.0 / tau } else { 0.0 });
    let yv = DVector::from_row_slice(y);
    let inv = s.clone().try_inverse().expect("invertible");
    -0.5 * (yv.transpose() * inv * &yv)[0] - 0.5 * s.determinant().ln()
}

/// Random state for a model with the given shape and rank.
pub fn random_state<R: Rng>(shape: &[usize], rank: usize, tau: f64, rng: &mut R) -> CpState {
    let mut n = || -> f64 { StandardNormal.sample(rng) };
    CpState {
        factors: (0..rank)
            .map(|_| shape.iter().map(|&m| DVector::from_iterator(m, (0..m).map(|_| n()))).collect())
            .collect(),
        weights: DVector::from_iterator(rank, (0..rank).map(|_| n())),
        tau,
        lengthscales: vec![vec![0.5; shape.len()]; rank],
        tie_lengthscales: false,
    }
}

pub fn random_data<R: Rng>(shape: &[usize], n: usize, rng: &mut R) -> TrainingData {
    let indices: Vec<Vec<usize>> = (0..n).map(|_| shape.iter().map(|&m| rng.random_range(0..m)).collect()).collect();
    let values = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    TrainingData::new(indices, values).unwrap()
}

pub fn uniform_model(shape: &[usize], rank: usize) -> BktfModel {
    let coords = shape.iter().map(|&m| (0..m).map(|i| i as f64 / (m - 1).max(1) as f64).collect()).collect();
    BktfModel::from_unit_coords(BktfConfig { rank, ..Default::default() }, coords).unwrap()
}

/// `CP` value at an index, recomputed from scratch.
pub fn cp_value(state: &CpState, ix: &[usize]) -> f64 {
    let mut total = 0.0;
    for r in 0..state.rank() {
        let mut p = state.weights[r];
        for (d, &i) in ix.iter().enumerate() {
            p *= state.factors[r][d][i];
        }
        total += p;
    }
    total
}

/// Per-observation weight `w_i` and residual target for factor `(d, r)`.
pub fn factor_regression(state: &CpState, data: &TrainingData, d: usize, r: usize) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let mut j = Vec::new();
    let mut w = Vec::new();
    let mut y = Vec::new();
    for (ix, &v) in data.indices.iter().zip(&data.values) {
        let mut wi = state.weights[r];
        for (h, &i) in ix.iter().enumerate() {
            if h != d {
                wi *= state.factors[r][h][i];
            }
        }
        let mut other = 0.0;
        for q in 0..state.rank() {
            if q != r {
                let mut p = state.weights[q];
                for (h, &i) in ix.iter().enumerate() {
                    p *= state.factors[q][h][i];
                }
                other += p;
            }
        }
        j.push(ix[d]);
        w.push(wi);
        y.push(v - other);
    }
    (j, w, y)
}

/// Sample mean and (population) covariance of a set of draws.
pub fn moments(draws: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = draws.len() as f64;
    let k = draws[0].len();
    let mean = draws.iter().fold(DVector::zeros(k), |acc, x| acc + x) / n;
    let mut cov = DMatrix::zeros(k, k);
    for x in draws {
        let c = x - &mean;
        cov += &c * c.transpose();
    }
    (mean, cov / n)
}

/// Largest deviation of the sample moments from the target, in units of the
/// Monte-Carlo standard error of each entry.
pub fn moment_z_scores(draws: &[DVector<f64>], mean: &DVector<f64>, cov: &DMatrix<f64>) -> (f64, f64) {
    let n = draws.len() as f64;
    let (m_hat, c_hat) = moments(draws);
    let k = mean.len();
    let mut z_mean: f64 = 0.0;
    let mut z_cov: f64 = 0.0;
    for i in 0..k {
        z_mean = z_mean.max((m_hat[i] - mean[i]).abs() / (cov[(i, i)] / n).sqrt());
        for j in 0..k {
            let se = ((cov[(i, i)] * cov[(j, j)] + cov[(i, j)].powi(2)) / n).sqrt();
            z_cov = z_cov.max((c_hat[(i, j)] - cov[(i, j)]).abs() / se);
        }
    }
    (z_mean, z_cov)
}

/// Two-sided one-sample Kolmogorov–Smirnov test; returns `(D, p)` using the
/// asymptotic distribution with the Stephens small-sample correction.
pub fn ks_test(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * (k as f64 * lambda).powi(2)).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    (d, p.clamp(0.0, 1.0))
}

pub fn normal_cdf(x: f64, mu: f64, sd: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(mu, sd).unwrap().cdf(x)
}
