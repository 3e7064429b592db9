use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tensor::{fill_rows, rows_per_block};
use super::{BktfModel, CpState, McmcConfig, TrainingData};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummaryMode {
    /// Elementwise mean and variance of the post-burn-in sample tensors.
    MeanVar,
    /// Elementwise maximum of the post-burn-in sample tensors.
    RunningMax,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SummaryKind {
    MeanVar { mean: Vec<f64>, var: Vec<f64> },
    RunningMax { max: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub shape: Vec<usize>,
    pub kind: SummaryKind,
    /// Number of sample tensors folded in.
    pub samples: usize,
    /// Average noise precision over the kept samples.
    pub mean_tau: f64,
}

impl PosteriorSummary {
    pub fn len(&self) -> usize {
        match &self.kind {
            SummaryKind::MeanVar { mean, .. } => mean.len(),
            SummaryKind::RunningMax { max } => max.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Acquisition score of a flat entry.
    pub fn score(&self, flat: usize, beta: f64) -> f64 {
        match &self.kind {
            SummaryKind::MeanVar { mean, var } => mean[flat] + beta * var[flat].max(0.0).sqrt(),
            SummaryKind::RunningMax { max } => max[flat],
        }
    }
}

enum Accumulator {
    MeanVar { mean: Vec<f64>, m2: Vec<f64> },
    Max { max: Vec<f64> },
}

impl Accumulator {
    fn new(mode: SummaryMode, len: usize) -> Result<Self> {
        let alloc = |fill: f64| -> Result<Vec<f64>> {
            let mut v = Vec::new();
            v.try_reserve_exact(len).map_err(|_| Error::TooLarge { entries: len, cap: 0 })?;
            v.resize(len, fill);
            Ok(v)
        };
        Ok(match mode {
            SummaryMode::MeanVar => Accumulator::MeanVar { mean: alloc(0.0)?, m2: alloc(0.0)? },
            SummaryMode::RunningMax => Accumulator::Max { max: alloc(f64::NEG_INFINITY)? },
        })
    }

    /// Folds in the `count`-th sample (1-based).
    #[cfg(test)]
    fn push(&mut self, sample: &[f64], count: usize) {
        let c = count as f64;
        match self {
            Accumulator::MeanVar { mean, m2 } => {
                for ((mu, s2), &x) in mean.iter_mut().zip(m2.iter_mut()).zip(sample) {
                    welford(mu, s2, x, c);
                }
            }
            Accumulator::Max { max } => {
                for (m, &x) in max.iter_mut().zip(sample) {
                    *m = m.max(x);
                }
            }
        }
    }

    /// Folds in the reconstruction of `state` as the `count`-th sample,
    /// one block at a time so the full tensor is never materialized.
    fn push_state(&mut self, state: &CpState, count: usize) {
        let shape = state.shape();
        let rows = rows_per_block(&shape);
        let block = rows * shape[shape.len() - 1];
        let c = count as f64;
        let scratch = || vec![0.0; block];
        match self {
            Accumulator::MeanVar { mean, m2 } => {
                mean.par_chunks_mut(block).zip(m2.par_chunks_mut(block)).enumerate().for_each_init(
                    scratch,
                    |buf, (k, (mu, s2))| {
                        let buf = &mut buf[..mu.len()];
                        fill_rows(state, &shape, k * rows, buf);
                        for ((mu, s2), &x) in mu.iter_mut().zip(s2.iter_mut()).zip(buf.iter()) {
                            welford(mu, s2, x, c);
                        }
                    },
                );
            }
            Accumulator::Max { max } => {
                max.par_chunks_mut(block).enumerate().for_each_init(scratch, |buf, (k, m)| {
                    let buf = &mut buf[..m.len()];
                    fill_rows(state, &shape, k * rows, buf);
                    for (m, &x) in m.iter_mut().zip(buf.iter()) {
                        if x > *m {
                            *m = x;
                        }
                    }
                });
            }
        }
    }

    fn finish(self, count: usize) -> SummaryKind {
        match self {
            Accumulator::MeanVar { mean, mut m2 } => {
                let c = count as f64;
                m2.iter_mut().for_each(|v| *v = (*v / c).max(0.0));
                SummaryKind::MeanVar { mean, var: m2 }
            }
            Accumulator::Max { max } => SummaryKind::RunningMax { max },
        }
    }
}

fn welford(mu: &mut f64, s2: &mut f64, x: f64, count: f64) {
    let delta = x - *mu;
    *mu += delta / count;
    *s2 += delta * (x - *mu);
}

impl BktfModel {
    /// Runs the chain for `cfg.iterations` sweeps and summarizes every
    /// post-burn-in reconstruction without retaining it. Starts from `warm`
    /// when given and warm starts are enabled, otherwise from a prior draw.
    pub fn fit_and_summarize<R: Rng + ?Sized>(
        &self,
        data: &TrainingData,
        cfg: &McmcConfig,
        mode: SummaryMode,
        warm: Option<CpState>,
        rng: &mut R,
    ) -> Result<(CpState, PosteriorSummary)> {
        cfg.validate()?;
        if data.is_empty() {
            return Err(Error::invalid("cannot fit the surrogate without observations"));
        }
        self.check_data(data)?;
        let mut state = match warm {
            Some(s) if cfg.warm_start => {
                s.validate(self.shape())?;
                s
            }
            _ => self.init_state(rng)?,
        };
        if state.tie_lengthscales != self.config.tie_lengthscales {
            state.tie_lengthscales = self.config.tie_lengthscales;
        }

        let len: usize = self.shape().iter().product();
        let mut acc = Accumulator::new(mode, len)?;

        let mut kept = 0usize;
        let mut tau_sum = 0.0;
        for k in 1..=cfg.iterations {
            self.mcmc_sweep(&mut state, data, rng)?;
            if k > cfg.burn_in {
                kept += 1;
                tau_sum += state.tau;
                acc.push_state(&state, kept);
            }
        }
        let summary = PosteriorSummary {
            shape: self.shape().to_vec(),
            kind: acc.finish(kept),
            samples: kept,
            mean_tau: tau_sum / kept as f64,
        };
        Ok((state, summary))
    }
}

/// Best unobserved entry (flat index) under the summary's acquisition
/// surface: `U + beta * sqrt(V)` for mean/variance summaries, the running
/// maximum otherwise. Ties go to the lowest flat index.
pub fn acquire_next(summary: &PosteriorSummary, observed: &[usize], beta: f64) -> Result<usize> {
    let len = summary.len();
    let mut seen = vec![false; len];
    for &i in observed {
        if i >= len {
            return Err(Error::IndexOutOfRange { index: vec![i], shape: summary.shape.clone() });
        }
        seen[i] = true;
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, taken) in seen.into_iter().enumerate() {
        if taken {
            continue;
        }
        let s = summary.score(i, beta);
        let s = if s.is_nan() { f64::NEG_INFINITY } else { s };
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i).ok_or(Error::GridExhausted)
}
