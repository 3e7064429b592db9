use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::tensor::predict_unchecked;
use super::{standard_normal_vector, BktfModel, CpState, NoisePrior, TrainingData};
use crate::error::{Error, Result};
use crate::kernels::{factor_gram, CholFactor, BASE_JITTER};

/// Gaussian full conditional of one factor vector, in precision form.
#[derive(Debug, Clone)]
pub struct FactorPosterior {
    pub mean: DVector<f64>,
    /// Cholesky factor of the posterior precision.
    pub precision: CholFactor,
}

impl FactorPosterior {
    pub fn covariance(&self) -> DMatrix<f64> {
        self.precision.inverse()
    }
}

/// Gaussian full conditional of the weight vector.
#[derive(Debug, Clone)]
pub struct WeightsPosterior {
    pub mean: DVector<f64>,
    pub precision: CholFactor,
}

impl WeightsPosterior {
    pub fn covariance(&self) -> DMatrix<f64> {
        self.precision.inverse()
    }
}

impl BktfModel {
    /// Per-coordinate sufficient statistics for factor `(d, r)`:
    /// `a_j = tau * sum w_i y_r^i` and `b_j = sum w_i^2` over observations
    /// whose `d`-th index is `j`, with `w_i = lambda_r prod_{h != d} g_h^r`
    /// and `y_r^i` the residual after removing every other rank.
    fn factor_stats(&self, state: &CpState, d: usize, r: usize, data: &TrainingData) -> (DVector<f64>, DVector<f64>) {
        let m = self.shape()[d];
        let mut a = DVector::zeros(m);
        let mut b = DVector::zeros(m);
        let fr = &state.factors[r];
        for (ix, &y) in data.indices.iter().zip(&data.values) {
            let mut w = state.weights[r];
            for (h, g) in fr.iter().enumerate() {
                if h != d {
                    w *= g[ix[h]];
                }
            }
            let mut others = 0.0;
            for (h, fh) in state.factors.iter().enumerate() {
                if h != r {
                    others += state.weights[h] * fh.iter().zip(ix).map(|(g, &i)| g[i]).product::<f64>();
                }
            }
            let j = ix[d];
            b[j] += w * w;
            a[j] += w * (y - others);
        }
        a *= state.tau;
        (a, b)
    }

    fn posterior_precision(&self, state: &CpState, b: &DVector<f64>, gram: &CholFactor) -> Result<CholFactor> {
        let mut lambda = gram.inverse();
        for j in 0..b.len() {
            lambda[(j, j)] += state.tau * b[j];
        }
        CholFactor::robust(lambda)
    }

    /// Full conditional of `g_d^r` given everything else; `gram` is the
    /// factored prior covariance `K_d^r`.
    pub fn factor_posterior(
        &self,
        state: &CpState,
        d: usize,
        r: usize,
        data: &TrainingData,
        gram: &CholFactor,
    ) -> Result<FactorPosterior> {
        self.check_data(data)?;
        let (a, b) = self.factor_stats(state, d, r, data);
        let precision = self.posterior_precision(state, &b, gram)?;
        let mean = precision.solve(&a);
        Ok(FactorPosterior { mean, precision })
    }

    /// Draws a new `g_d^r` from its full conditional.
    pub fn gibbs_factor<R: Rng + ?Sized>(
        &self,
        state: &CpState,
        d: usize,
        r: usize,
        data: &TrainingData,
        gram: &CholFactor,
        rng: &mut R,
    ) -> Result<DVector<f64>> {
        self.check_data(data)?;
        let (a, b) = self.factor_stats(state, d, r, data);
        let precision = self.posterior_precision(state, &b, gram)?;
        // L^T g = z + L^{-1} a
        let z = standard_normal_vector(a.len(), rng);
        Ok(precision.solve_upper_transpose(&(z + precision.solve_lower(&a))))
    }

    /// Log marginal likelihood of `l_d^r` with `g_d^r` integrated out, up to
    /// an additive constant that does not depend on the lengthscale.
    pub fn marginal_loglik_lengthscale(
        &self,
        state: &CpState,
        d: usize,
        r: usize,
        data: &TrainingData,
        lengthscale: f64,
    ) -> Result<f64> {
        let (a, b) = self.factor_stats(state, d, r, data);
        self.collapsed_loglik(state, d, &a, &b, lengthscale)
    }

    /// Only coordinates with `b_j > 0` carry information. On that subset `S`
    /// the collapsed likelihood is a GP likelihood of the pseudo-observations
    /// `a_j / (tau b_j)` under covariance `K_SS + diag(1 / (tau b_j))`.
    fn collapsed_loglik(
        &self,
        state: &CpState,
        d: usize,
        a: &DVector<f64>,
        b: &DVector<f64>,
        lengthscale: f64,
    ) -> Result<f64> {
        let spec = self.kernel(lengthscale)?;
        let coords = self.unit_coords(d);
        let support: Vec<usize> = (0..b.len()).filter(|&j| b[j] > 0.0).collect();
        let k = support.len();
        if k == 0 {
            return Ok(0.0);
        }
        let mut cov = DMatrix::zeros(k, k);
        let mut pseudo = DVector::zeros(k);
        for (p, &i) in support.iter().enumerate() {
            let noise = 1.0 / (state.tau * b[i]);
            cov[(p, p)] = 1.0 + BASE_JITTER + noise;
            pseudo[p] = a[i] * noise;
            for (q, &j) in support[..p].iter().enumerate() {
                let v = spec.value(coords[i] - coords[j]);
                cov[(p, q)] = v;
                cov[(q, p)] = v;
            }
        }
        let chol = CholFactor::robust(cov)?;
        let u = chol.solve_lower(&pseudo);
        Ok(-0.5 * u.norm_squared() - 0.5 * chol.log_det())
    }

    /// One slice-sampling update of `log l_d^r`. With tied lengthscales the
    /// shared `l_d` is updated against the likelihood summed over all ranks.
    pub fn slice_sample_lengthscale<R: Rng + ?Sized>(
        &self,
        state: &CpState,
        d: usize,
        r: usize,
        data: &TrainingData,
        rng: &mut R,
    ) -> Result<f64> {
        self.check_data(data)?;
        let ranks: Vec<usize> = if state.tie_lengthscales { (0..state.rank()).collect() } else { vec![r] };
        let stats: Vec<_> = ranks.iter().map(|&q| self.factor_stats(state, d, q, data)).collect();
        let prior = self.config.hyperprior;
        let target = |log_l: f64| {
            let l = log_l.exp();
            if !(l > 0.0 && l.is_finite()) {
                return f64::NEG_INFINITY;
            }
            let mut total = prior.log_density_log(log_l);
            for (a, b) in &stats {
                match self.collapsed_loglik(state, d, a, b, l) {
                    Ok(v) => total += v,
                    Err(_) => return f64::NEG_INFINITY,
                }
            }
            total
        };
        let x0 = state.lengthscales[r][d].ln();
        Ok(self.config.slice.sample(x0, target, rng).exp())
    }

    /// Posterior parameters `(a*, b*)` of the Gamma full conditional of `tau`.
    pub fn noise_posterior(&self, state: &CpState, data: &TrainingData, prior: &NoisePrior) -> (f64, f64) {
        let rss: f64 =
            data.indices.iter().zip(&data.values).map(|(ix, y)| (y - predict_unchecked(state, ix)).powi(2)).sum();
        (prior.shape + 0.5 * data.len() as f64, prior.rate + 0.5 * rss)
    }

    pub fn gibbs_noise<R: Rng + ?Sized>(
        &self,
        state: &CpState,
        data: &TrainingData,
        prior: &NoisePrior,
        rng: &mut R,
    ) -> Result<f64> {
        self.check_data(data)?;
        let (shape, rate) = self.noise_posterior(state, data, prior);
        let gamma = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::invalid(format!("gamma posterior: {e}")))?;
        Ok(gamma.sample(rng).max(f64::MIN_POSITIVE))
    }

    /// Full conditional of the weights: precision `tau G G^T + I`, mean
    /// `tau * precision^{-1} G y`, with column `i` of `G` holding the per-rank
    /// products at observation `i`.
    pub fn weights_posterior(&self, state: &CpState, data: &TrainingData) -> Result<WeightsPosterior> {
        self.check_data(data)?;
        let rank = state.rank();
        let mut ggt = DMatrix::<f64>::identity(rank, rank);
        let mut gy = DVector::<f64>::zeros(rank);
        let mut col = vec![0.0; rank];
        for (ix, &y) in data.indices.iter().zip(&data.values) {
            for (c, fr) in col.iter_mut().zip(&state.factors) {
                *c = fr.iter().zip(ix).map(|(g, &i)| g[i]).product();
            }
            for p in 0..rank {
                gy[p] += state.tau * col[p] * y;
                for q in 0..rank {
                    ggt[(p, q)] += state.tau * col[p] * col[q];
                }
            }
        }
        let precision = CholFactor::robust(ggt)?;
        let mean = precision.solve(&gy);
        Ok(WeightsPosterior { mean, precision })
    }

    pub fn gibbs_weights<R: Rng + ?Sized>(
        &self,
        state: &CpState,
        data: &TrainingData,
        rng: &mut R,
    ) -> Result<DVector<f64>> {
        let post = self.weights_posterior(state, data)?;
        let z = standard_normal_vector(post.mean.len(), rng);
        Ok(&post.mean + post.precision.solve_upper_transpose(&z))
    }

    /// One Gibbs sweep: for each rank and dimension the lengthscale then the
    /// factor, followed by the noise precision and finally the weights.
    pub fn mcmc_sweep<R: Rng + ?Sized>(&self, state: &mut CpState, data: &TrainingData, rng: &mut R) -> Result<()> {
        self.check_data(data)?;
        for r in 0..state.rank() {
            for d in 0..self.dims() {
                if !state.tie_lengthscales || r == 0 {
                    let l = self.slice_sample_lengthscale(state, d, r, data, rng)?;
                    if state.tie_lengthscales {
                        for lr in state.lengthscales.iter_mut() {
                            lr[d] = l;
                        }
                    } else {
                        state.lengthscales[r][d] = l;
                    }
                }
                let gram = factor_gram(&self.kernel(state.lengthscales[r][d])?, self.unit_coords(d))?;
                let g = self.gibbs_factor(state, d, r, data, &gram, rng)?;
                state.factors[r][d] = g;
            }
        }
        let noise = self.config.noise;
        state.tau = self.gibbs_noise(state, data, &noise, rng)?;
        state.weights = self.gibbs_weights(state, data, rng)?;
        Ok(())
    }
}
