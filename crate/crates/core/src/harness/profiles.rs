//! Performance profiles over a set of experiments.
//!
//! `t[p][a]` is the number of evaluations method `a` needed to solve
//! experiment `p` (or `N_p + 100` if it never did). With
//! `gamma = t / min_a t`, the profile of a method at `rho` is the fraction of
//! experiments with `gamma <= rho`, evaluated at `rho = 1, ..., N_max + 1`,
//! and the AUC is the sum of those values.

use crate::error::{Error, Result};

/// Penalty added to the budget for unsolved experiments.
pub const UNSOLVED_PENALTY: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileMatrix {
    pub methods: Vec<String>,
    /// Budget `N_p` of each experiment.
    pub budgets: Vec<usize>,
    /// `t[p][a]`, one row per experiment.
    pub t: Vec<Vec<f64>>,
}

impl ProfileMatrix {
    pub fn new(methods: Vec<String>) -> Self {
        ProfileMatrix { methods, budgets: Vec::new(), t: Vec::new() }
    }

    pub fn push(&mut self, budget: usize, row: Vec<f64>) -> Result<()> {
        if row.len() != self.methods.len() {
            return Err(Error::invalid(format!("{} entries for {} methods", row.len(), self.methods.len())));
        }
        if let Some(v) = row.iter().find(|&&v| !(v >= 1.0 && v <= (budget + UNSOLVED_PENALTY) as f64)) {
            return Err(Error::invalid(format!("evaluation count {v} outside [1, {}]", budget + UNSOLVED_PENALTY)));
        }
        self.budgets.push(budget);
        self.t.push(row);
        Ok(())
    }

    pub fn experiments(&self) -> usize {
        self.t.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profiles {
    pub methods: Vec<String>,
    /// Integer abscissae `1..=N_max + 1`.
    pub rho: Vec<usize>,
    /// `curves[a][k]` is the profile of method `a` at `rho[k]`.
    pub curves: Vec<Vec<f64>>,
    pub auc: Vec<f64>,
    /// Performance ratios `gamma[p][a]`.
    pub gamma: Vec<Vec<f64>>,
}

pub fn compute_profiles(m: &ProfileMatrix) -> Result<Profiles> {
    if m.t.is_empty() || m.methods.is_empty() {
        return Err(Error::EmptyProfile);
    }
    let gamma: Vec<Vec<f64>> =
        m.t.iter()
            .map(|row| {
                let best = row.iter().copied().fold(f64::INFINITY, f64::min);
                row.iter().map(|t| t / best).collect()
            })
            .collect();
    let n_max = *m.budgets.iter().max().expect("non-empty");
    let rho: Vec<usize> = (1..=n_max + 1).collect();
    let np = m.t.len() as f64;
    let curves: Vec<Vec<f64>> = (0..m.methods.len())
        .map(|a| rho.iter().map(|&r| gamma.iter().filter(|g| g[a] <= r as f64).count() as f64 / np).collect())
        .collect();
    let auc = curves.iter().map(|c| c.iter().sum()).collect();
    Ok(Profiles { methods: m.methods.clone(), rho, curves, auc, gamma })
}

/// Evaluations needed to get within `tol` of the optimum.
///
/// `errors` holds the absolute error after each evaluation, initial design
/// first. A hit inside the initial design counts as its 0-based position,
/// floored at 1; a hit at BO iteration `k` counts as `k`. Runs that never
/// get there score `budget + 100`.
pub fn detect_solved(errors: &[f64], n_init: usize, budget: usize, tol: f64) -> f64 {
    match errors.iter().position(|&e| e <= tol) {
        Some(i) if i < n_init => i.max(1) as f64,
        Some(i) => (i + 1 - n_init) as f64,
        None => (budget + UNSOLVED_PENALTY) as f64,
    }
}
