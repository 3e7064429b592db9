//! BO loops, experiment orchestration, external objectives and
//! performance-profile evaluation.

mod config;
mod objective;
mod observations;
mod output;
mod profiles;
mod run;

use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{
    BktfSection, EvaluationSection, ExperimentConfig, GpSection, GridConfig, Method, ObjectiveConfig, PriorSection,
};
pub use objective::{format_request, parse_reply, ExternalObjective, Objective, ObjectiveSpec};
pub use observations::{Observation, ObservationSet};
pub use output::{read_profile_matrix, write_outputs, write_profiles};
pub use profiles::{compute_profiles, detect_solved, ProfileMatrix, Profiles, UNSOLVED_PENALTY};
pub use run::{run_bo, Problem, RunTrace, Surrogates, TraceRow, DUPLICATE_RADIUS};

use crate::benchfns::{self, Sense};
use crate::bktf::{BktfConfig, McmcConfig, NoisePrior};
use crate::error::{Error, Result};
use crate::grid::GridSpace;
use crate::kernels::LengthscaleHyperprior;
use crate::slice::SliceSampler;

/// Random stream for one replication. `lane` 0 drives the initial design,
/// which is therefore shared by all methods; every method has its own lane.
/// The stream id is `(run << 8) | lane` on a ChaCha8 generator keyed by the
/// master seed, so results do not depend on scheduling.
pub fn replication_rng(seed: u64, run: usize, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((run as u64) << 8) | lane);
    rng
}

/// A fully resolved experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    /// Configuration with every defaulted field filled in.
    pub config: ExperimentConfig,
    pub objective: ObjectiveSpec,
    pub problem: Problem,
    pub surrogates: Surrogates,
}

impl Experiment {
    pub fn resolve(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let mut config = config.clone();
        let obj = &config.objective;
        let (objective, bounds, sense, optimum, grid) = match (&obj.function, &obj.command) {
            (Some(name), _) => {
                let b = benchfns::by_name(name)?;
                if obj.bounds.as_ref().is_some_and(|x| *x != b.bounds) {
                    return Err(Error::Config(format!("`bounds` cannot be changed for the benchmark {name}")));
                }
                if obj.sense.is_some_and(|s| s != b.sense) {
                    return Err(Error::Config(format!("`sense` cannot be changed for the benchmark {name}")));
                }
                let points = config.grid.points.clone().unwrap_or_else(|| b.default_points.clone());
                let grid = GridSpace::uniform(&b.bounds, &points)?;
                (ObjectiveSpec::Benchmark(b.clone()), b.bounds.clone(), b.sense, obj.optimum.or(Some(b.optimum)), grid)
            }
            (None, Some(cmd)) => {
                let bounds = obj.bounds.clone().expect("validated");
                let points = config
                    .grid
                    .points
                    .clone()
                    .ok_or_else(|| Error::Config("external objectives need `grid.points`".into()))?;
                let grid = GridSpace::uniform(&bounds, &points)?;
                let spec = ObjectiveSpec::External {
                    command: cmd.clone(),
                    timeout: Duration::from_secs_f64(obj.timeout_secs),
                };
                (spec, bounds, obj.sense.unwrap_or(Sense::Minimize), obj.optimum, grid)
            }
            (None, None) => unreachable!("validated"),
        };
        if grid.dims() != bounds.len() {
            return Err(Error::Config(format!("{} grid dimensions for {} bounds", grid.dims(), bounds.len())));
        }

        let grid_optimum = match &objective {
            ObjectiveSpec::Benchmark(b) if config.methods.iter().any(|m| m.on_grid()) => {
                match benchfns::grid_optimum(b, &grid, config.evaluation.enumeration_cap) {
                    Ok((_, v)) => Some(v),
                    Err(Error::TooLarge { entries, cap }) => {
                        log::warn!(
                            "grid of {entries} entries exceeds the enumeration cap {cap}; using the continuous optimum"
                        );
                        None
                    }
                    Err(e) => return Err(e),
                }
            }
            _ => None,
        };

        let n_init = config.n_init.unwrap_or(grid.dims());
        config.n_init = Some(n_init);
        config.grid.points = Some(grid.shape().to_vec());
        config.objective.sense = Some(sense);
        config.objective.bounds = Some(bounds);
        config.objective.optimum = optimum;

        let problem =
            Problem { grid, sense, grid_optimum, optimum, n_init, budget: config.budget, timing: config.timing };
        let b = &config.bktf;
        let surrogates = Surrogates {
            bktf: BktfConfig {
                rank: b.rank,
                kernel: b.kernel,
                hyperprior: LengthscaleHyperprior::new(config.priors.mu_l, config.priors.tau_l)?,
                noise: NoisePrior::new(config.priors.a0, config.priors.b0)?,
                tie_lengthscales: b.tie_lengthscales,
                slice: SliceSampler::default(),
            },
            mcmc: McmcConfig { iterations: b.iterations, burn_in: b.burn_in, warm_start: b.warm_start },
            acquisition: b.acquisition,
            bktf_beta: b.beta,
            gp: config.gp.clone(),
        };
        Ok(Experiment { config, objective, problem, surrogates })
    }

    /// Runs one replication of one method.
    pub fn run_one(&self, method: Method, run: usize) -> RunTrace {
        let seed = self.config.seed;
        let mut design = replication_rng(seed, run, 0);
        let mut rng = replication_rng(seed, run, method.lane());
        match self.objective.open() {
            Ok(mut obj) => run_bo(method, obj.as_mut(), &self.problem, &self.surrogates, run, &mut design, &mut rng),
            Err(e) => RunTrace {
                method,
                run,
                n_init: self.problem.n_init,
                budget: self.problem.budget,
                rows: Vec::new(),
                failure: Some(e.to_string()),
            },
        }
    }

    /// Runs every method and replication, replications in parallel.
    pub fn run(&self) -> ExperimentResult {
        let jobs: Vec<(Method, usize)> =
            self.config.methods.iter().flat_map(|&m| (0..self.config.replications).map(move |r| (m, r))).collect();
        let traces = jobs.into_par_iter().map(|(m, r)| self.run_one(m, r)).collect();
        ExperimentResult { config: self.config.clone(), traces }
    }
}

/// Traces of every (method, replication) pair, in configuration order.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub traces: Vec<RunTrace>,
}

impl ExperimentResult {
    pub fn traces_for(&self, method: Method) -> impl Iterator<Item = &RunTrace> {
        self.traces.iter().filter(move |t| t.method == method)
    }

    /// One experiment per replication. `None` if the optimum is unknown.
    pub fn profile_matrix(&self) -> Option<ProfileMatrix> {
        let mut m = ProfileMatrix::new(self.config.methods.iter().map(|m| m.name().to_string()).collect());
        let tol = self.config.evaluation.tolerance;
        for run in 0..self.config.replications {
            let mut row = Vec::new();
            for &method in &self.config.methods {
                let t = self.traces_for(method).find(|t| t.run == run)?;
                row.push(detect_solved(&t.errors()?, t.n_init, t.budget, tol));
            }
            m.push(self.config.budget, row).ok()?;
        }
        Some(m)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RunTrace> {
        self.traces.iter().filter(|t| t.failure.is_some())
    }
}

/// Resolves and runs a configuration.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    Ok(Experiment::resolve(config)?.run())
}
