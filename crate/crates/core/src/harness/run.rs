use std::time::Instant;

use rand::seq::index;
use rand::Rng;

use super::config::{GpSection, Method};
use super::objective::Objective;
use super::observations::{Observation, ObservationSet};
use crate::benchfns::Sense;
use crate::bktf::{acquire_next, BktfConfig, BktfModel, CpState, McmcConfig, SummaryMode, TrainingData};
use crate::error::{Error, Result};
use crate::gp::{
    fit_hyperparameters, next_query_continuous, next_query_grid, Acquisition, GpFitOptions, GpHyper, GpModel,
};
use crate::grid::{GridSpace, Normalizer};
use crate::optim::{DirectOptions, NelderMeadOptions};

/// Continuous queries closer than this (max-norm, unit cube) to an earlier
/// point are replaced by a random point.
pub const DUPLICATE_RADIUS: f64 = 1e-9;

/// Everything a single run needs to know about the problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: GridSpace,
    pub sense: Sense,
    /// Best value attainable on the grid, if known.
    pub grid_optimum: Option<f64>,
    /// Continuous optimum, if known.
    pub optimum: Option<f64>,
    pub n_init: usize,
    pub budget: usize,
    pub timing: bool,
}

impl Problem {
    /// Reference value for the error column of a method.
    pub fn target_for(&self, method: Method) -> Option<f64> {
        if method.on_grid() {
            self.grid_optimum.or(self.optimum)
        } else {
            self.optimum
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surrogates {
    pub bktf: BktfConfig,
    pub mcmc: McmcConfig,
    pub acquisition: SummaryMode,
    pub bktf_beta: f64,
    pub gp: GpSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// `<= 0` for the initial design, `1..=N` for BO iterations.
    pub iter: i64,
    pub x: Vec<f64>,
    pub y: f64,
    pub best: f64,
    pub abs_err: Option<f64>,
    /// Wall time in milliseconds (0 when timing is off).
    pub ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub method: Method,
    pub run: usize,
    pub n_init: usize,
    pub budget: usize,
    pub rows: Vec<TraceRow>,
    /// Why the run stopped early, if it did.
    pub failure: Option<String>,
}

impl RunTrace {
    pub fn errors(&self) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.abs_err).collect()
    }
}

struct Recorder<'a> {
    trace: RunTrace,
    obs: ObservationSet,
    target: Option<f64>,
    timing: bool,
    objective: &'a mut dyn Objective,
}

impl Recorder<'_> {
    fn evaluate(&mut self, x: Vec<f64>, flat: Option<usize>, started: Instant) -> Result<()> {
        let y = self.objective.evaluate(&x)?;
        if !y.is_finite() {
            return Err(Error::Objective(format!("non-finite value {y} at {x:?}")));
        }
        self.obs.push(Observation { x: x.clone(), flat, y })?;
        let best = self.obs.best().expect("just pushed");
        let iter = self.obs.len() as i64 - self.obs.n_init() as i64;
        let ms = if self.timing { started.elapsed().as_millis() as u64 } else { 0 };
        self.trace.rows.push(TraceRow { iter, x, y, best, abs_err: self.target.map(|t| (t - best).abs()), ms });
        Ok(())
    }
}

/// Runs one BO replication: `n_init` distinct grid points drawn with
/// `design_rng`, then `budget` acquisitions driven by `rng`. Failures stop
/// the run and are recorded in the returned trace.
pub fn run_bo<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    method: Method,
    objective: &mut dyn Objective,
    problem: &Problem,
    surrogates: &Surrogates,
    run: usize,
    design_rng: &mut R1,
    rng: &mut R2,
) -> RunTrace {
    let mut rec = Recorder {
        trace: RunTrace {
            method,
            run,
            n_init: problem.n_init,
            budget: problem.budget,
            rows: Vec::new(),
            failure: None,
        },
        obs: ObservationSet::new(problem.n_init, problem.budget, problem.sense),
        target: problem.target_for(method),
        timing: problem.timing,
        objective,
    };
    if let Err(e) = drive(method, &mut rec, problem, surrogates, design_rng, rng) {
        log::warn!("{} run {run} stopped after {} evaluations: {e}", method.name(), rec.obs.len());
        rec.trace.failure = Some(e.to_string());
    }
    rec.trace
}

fn drive<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    method: Method,
    rec: &mut Recorder<'_>,
    problem: &Problem,
    s: &Surrogates,
    design_rng: &mut R1,
    rng: &mut R2,
) -> Result<()> {
    let grid = &problem.grid;
    if problem.n_init == 0 || problem.n_init > grid.len() {
        return Err(Error::invalid(format!("initial design of {} on a grid of {}", problem.n_init, grid.len())));
    }
    if method.on_grid() && problem.n_init + problem.budget > grid.len() {
        return Err(Error::invalid(format!(
            "n_init + budget = {} exceeds the {} grid entries",
            problem.n_init + problem.budget,
            grid.len()
        )));
    }
    for flat in index::sample(design_rng, grid.len(), problem.n_init) {
        let started = Instant::now();
        let x = grid.point(&grid.unflatten(flat)?)?;
        // continuous methods treat the design as ordinary points
        rec.evaluate(x, method.on_grid().then_some(flat), started)?;
    }

    let bktf = if method == Method::Bktf { Some(BktfModel::new(s.bktf.clone(), grid)?) } else { None };
    let mut warm: Option<CpState> = None;
    let fit_opts = GpFitOptions { restarts: s.gp.restarts, ..Default::default() };
    let direct = DirectOptions { budget: s.gp.direct_budget, epsilon: s.gp.direct_epsilon };
    let polish = NelderMeadOptions { max_iters: s.gp.polish_iters, ..Default::default() };

    for k in 1..=problem.budget {
        let started = Instant::now();
        let targets = rec.obs.targets();
        let norm = Normalizer::fit(&targets);
        let z = norm.normalize_all(&targets);
        match method {
            Method::Bktf => {
                let model = bktf.as_ref().expect("built above");
                let indices = rec
                    .obs
                    .records()
                    .iter()
                    .map(|r| Ok(grid.unflatten(r.flat.expect("grid method"))?.0))
                    .collect::<Result<Vec<_>>>()?;
                let data = TrainingData::new(indices, z)?;
                let (state, summary) = model.fit_and_summarize(&data, &s.mcmc, s.acquisition, warm.take(), rng)?;
                log::debug!("bktf iter {k}: mean tau {:.3e}, lengthscales {:?}", summary.mean_tau, state.lengthscales);
                warm = Some(state);
                let flat = acquire_next(&summary, &rec.obs.observed_flats(), s.bktf_beta)?;
                rec.evaluate(grid.point(&grid.unflatten(flat)?)?, Some(flat), started)?;
            }
            _ => {
                let inputs: Vec<Vec<f64>> = rec.obs.records().iter().map(|r| grid.to_unit(&r.x)).collect();
                let model = if inputs.len() >= 2 {
                    fit_hyperparameters(&inputs, &z, &fit_opts, rng)?
                } else {
                    GpModel::new(inputs.clone(), z.clone(), GpHyper::unit(grid.dims()))?
                };
                log::debug!("{} iter {k}: hyperparameters {:?}", method.name(), model.hyper());
                let f_best = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let af = match method {
                    Method::GpEi | Method::GpgridEi => Acquisition::Ei { f_best, variant: s.gp.ei },
                    _ => Acquisition::Ucb { beta: s.gp.beta },
                };
                if method.on_grid() {
                    let (flat, _) = next_query_grid(&model, &af, grid, &rec.obs.observed_flats())?;
                    rec.evaluate(grid.point(&grid.unflatten(flat)?)?, Some(flat), started)?;
                } else {
                    let (mut x, _) = next_query_continuous(&model, &af, grid.bounds(), &direct, &polish)?;
                    let u = grid.to_unit(&x);
                    let repeat =
                        inputs.iter().any(|p| p.iter().zip(&u).all(|(a, b)| (a - b).abs() <= DUPLICATE_RADIUS));
                    if repeat {
                        let fresh: Vec<f64> = (0..grid.dims()).map(|_| rng.random::<f64>()).collect();
                        log::info!(
                            "{} iter {k}: query {x:?} repeats an earlier point, using a random one",
                            method.name()
                        );
                        x = grid.from_unit(&fresh);
                    }
                    rec.evaluate(x, None, started)?;
                }
            }
        }
    }
    Ok(())
}
