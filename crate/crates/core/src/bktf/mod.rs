//! Bayesian kernelized tensor factorization surrogate.
//!
//! The objective over a grid is modelled as a rank-`R` CP decomposition
//!
//! ```text
//! f(x) = sum_r lambda_r * prod_d g_d^r(x_d)
//! ```
//!
//! where each factor vector `g_d^r` carries a zero-mean GP prior with a
//! unit-variance kernel over the (unit-scaled) coordinates of dimension `d`,
//! `lambda_r ~ N(0, 1)`, the observation noise has precision `tau` with a
//! Gamma prior, and `log l_d^r` has a Gaussian hyperprior. Inference is a
//! Gibbs sampler whose per-factor sufficient statistics are accumulated by
//! looping over the observations, so the cost of an update never touches the
//! full tensor. Lengthscales are refreshed by slice sampling their collapsed
//! conditional.

mod sampler;
mod summary;
mod tensor;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpace;
use crate::kernels::{factor_gram, KernelFamily, KernelSpec, LengthscaleHyperprior};
use crate::slice::SliceSampler;

pub use sampler::{FactorPosterior, WeightsPosterior};
pub use summary::{acquire_next, PosteriorSummary, SummaryKind, SummaryMode};
pub use tensor::{predict_point, reconstruct_into, reconstruct_tensor};

/// Gamma(shape, rate) prior on the noise precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisePrior {
    pub shape: f64,
    pub rate: f64,
}

impl Default for NoisePrior {
    fn default() -> Self {
        NoisePrior { shape: 1e-6, rate: 1e-6 }
    }
}

impl NoisePrior {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0) {
            return Err(Error::invalid(format!("noise prior needs shape, rate > 0, got ({shape}, {rate})")));
        }
        Ok(NoisePrior { shape, rate })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    /// Total sweeps per fit.
    pub iterations: usize,
    /// Leading sweeps discarded before summarizing.
    pub burn_in: usize,
    /// Continue from the previous fit's final state when one is supplied.
    pub warm_start: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig { iterations: 400, burn_in: 200, warm_start: true }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::invalid(format!(
                "burn-in ({}) must be smaller than the number of iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }

    pub fn kept_samples(&self) -> usize {
        self.iterations - self.burn_in
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BktfConfig {
    pub rank: usize,
    pub kernel: KernelFamily,
    pub hyperprior: LengthscaleHyperprior,
    pub noise: NoisePrior,
    /// Share one lengthscale per dimension across all ranks.
    pub tie_lengthscales: bool,
    pub slice: SliceSampler,
}

impl Default for BktfConfig {
    fn default() -> Self {
        BktfConfig {
            rank: 2,
            kernel: KernelFamily::Matern32,
            hyperprior: LengthscaleHyperprior::default(),
            noise: NoisePrior::default(),
            tie_lengthscales: false,
            slice: SliceSampler::default(),
        }
    }
}

/// Observed grid entries and their (normalized) values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingData {
    pub indices: Vec<Vec<usize>>,
    pub values: Vec<f64>,
}

impl TrainingData {
    pub fn new(indices: Vec<Vec<usize>>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::invalid(format!("{} indices for {} values", indices.len(), values.len())));
        }
        Ok(TrainingData { indices, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One state of the Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct CpState {
    /// `factors[r][d]` is the rank-`r` factor over dimension `d`.
    pub factors: Vec<Vec<DVector<f64>>>,
    pub weights: DVector<f64>,
    /// Noise precision.
    pub tau: f64,
    /// `lengthscales[r][d]`, in unit-cube units.
    pub lengthscales: Vec<Vec<f64>>,
    pub tie_lengthscales: bool,
}

impl CpState {
    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> usize {
        self.factors.first().map_or(0, Vec::len)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.first().map_or_else(Vec::new, |f| f.iter().map(|g| g.len()).collect())
    }

    pub fn validate(&self, shape: &[usize]) -> Result<()> {
        let r = self.rank();
        if r == 0 || self.factors.len() != r || self.lengthscales.len() != r {
            return Err(Error::invalid("state rank mismatch"));
        }
        for (fr, lr) in self.factors.iter().zip(&self.lengthscales) {
            if fr.len() != shape.len() || lr.len() != shape.len() {
                return Err(Error::invalid("state dimension mismatch"));
            }
            if fr.iter().zip(shape).any(|(g, &m)| g.len() != m) {
                return Err(Error::invalid("factor length does not match the grid"));
            }
            if lr.iter().any(|&l| !(l > 0.0)) {
                return Err(Error::invalid("non-positive lengthscale"));
            }
        }
        if !(self.tau > 0.0) {
            return Err(Error::invalid("non-positive noise precision"));
        }
        Ok(())
    }
}

/// The surrogate bound to a particular grid.
#[derive(Debug, Clone)]
pub struct BktfModel {
    pub config: BktfConfig,
    unit_coords: Vec<Vec<f64>>,
    shape: Vec<usize>,
}

impl BktfModel {
    pub fn new(config: BktfConfig, grid: &GridSpace) -> Result<Self> {
        Self::from_unit_coords(config, grid.all_unit_coords())
    }

    /// Builds the model directly from per-dimension coordinates (already on
    /// the scale the kernels should see).
    pub fn from_unit_coords(config: BktfConfig, unit_coords: Vec<Vec<f64>>) -> Result<Self> {
        if config.rank == 0 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        if unit_coords.is_empty() || unit_coords.iter().any(Vec::is_empty) {
            return Err(Error::invalid("model needs at least one non-empty dimension"));
        }
        let shape = unit_coords.iter().map(Vec::len).collect();
        Ok(BktfModel { config, unit_coords, shape })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dims(&self) -> usize {
        self.shape.len()
    }

    pub fn unit_coords(&self, d: usize) -> &[f64] {
        &self.unit_coords[d]
    }

    pub(crate) fn kernel(&self, lengthscale: f64) -> Result<KernelSpec> {
        KernelSpec::new(self.config.kernel, lengthscale)
    }

    /// Cold-start state: lengthscales at the hyperprior median, factors drawn
    /// from their GP priors, weights from N(0, 1), and the noise precision at
    /// its prior mean.
    pub fn init_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CpState> {
        let rank = self.config.rank;
        let l0 = self.config.hyperprior.mu.exp();
        let mut factors = Vec::with_capacity(rank);
        for _ in 0..rank {
            let mut fr = Vec::with_capacity(self.dims());
            for d in 0..self.dims() {
                let chol = factor_gram(&self.kernel(l0)?, &self.unit_coords[d])?;
                let z = standard_normal_vector(self.shape[d], rng);
                fr.push(chol.l() * z);
            }
            factors.push(fr);
        }
        let weights = standard_normal_vector(rank, rng);
        let tau = (self.config.noise.shape / self.config.noise.rate).max(f64::MIN_POSITIVE);
        Ok(CpState {
            factors,
            weights,
            tau,
            lengthscales: vec![vec![l0; self.dims()]; rank],
            tie_lengthscales: self.config.tie_lengthscales,
        })
    }

    fn check_data(&self, data: &TrainingData) -> Result<()> {
        for ix in &data.indices {
            if ix.len() != self.dims() || ix.iter().zip(&self.shape).any(|(i, m)| i >= m) {
                return Err(Error::IndexOutOfRange { index: ix.clone(), shape: self.shape.clone() });
            }
        }
        Ok(())
    }
}

pub(crate) fn standard_normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}
