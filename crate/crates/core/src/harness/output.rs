//! Result files of an experiment directory.
//!
//! - `trace_<method>.csv`: `run,iter,x1..xD,y,best,abs_err,ms`, one row per
//!   evaluation
//! - `runs.csv`: `method,run,status,evaluations,t,message`
//! - `profiles.csv`: `method,rho,profile` and `auc.csv`: `method,auc`, when
//!   the optimum is known
//! - `manifest.toml`: the resolved configuration

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::config::ExperimentConfig;
use super::profiles::{compute_profiles, detect_solved, ProfileMatrix, Profiles};
use super::ExperimentResult;
use crate::error::{Error, Result};

const MANIFEST: &str = "manifest.toml";
const RUNS: &str = "runs.csv";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes every result file into `dir`, creating it if needed. Returns the
/// profiles when they could be computed.
pub fn write_outputs(dir: &Path, result: &ExperimentResult) -> Result<Option<Profiles>> {
    fs::create_dir_all(dir)?;
    let cfg = &result.config;
    let dims = cfg.objective.bounds.as_ref().map_or(0, |b| b.len());

    for &method in &cfg.methods {
        let mut w = csv::Writer::from_path(dir.join(format!("trace_{}.csv", method.name())))?;
        let mut header = vec!["run".to_string(), "iter".to_string()];
        header.extend((1..=dims).map(|d| format!("x{d}")));
        header.extend(["y", "best", "abs_err", "ms"].map(String::from));
        w.write_record(&header)?;
        for t in result.traces_for(method) {
            for r in &t.rows {
                let mut rec = vec![t.run.to_string(), r.iter.to_string()];
                rec.extend(r.x.iter().map(|v| v.to_string()));
                rec.extend([r.y.to_string(), r.best.to_string(), fmt_opt(r.abs_err), r.ms.to_string()]);
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
    }

    let tol = cfg.evaluation.tolerance;
    let mut w = csv::Writer::from_path(dir.join(RUNS))?;
    w.write_record(["method", "run", "status", "evaluations", "t", "message"])?;
    for t in &result.traces {
        let solved = t.errors().map(|e| detect_solved(&e, t.n_init, t.budget, tol));
        let status = if t.failure.is_some() { "failed" } else { "ok" };
        w.write_record([
            t.method.name().to_string(),
            t.run.to_string(),
            status.to_string(),
            t.rows.len().to_string(),
            fmt_opt(solved),
            t.failure.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let mut manifest = cfg.clone();
    manifest.output_dir = None;
    let text =
        format!("# Resolved configuration; rerun with `bktf run --config {MANIFEST}`.\n\n{}", manifest.to_toml()?);
    fs::write(dir.join(MANIFEST), text)?;

    match result.profile_matrix().map(|m| compute_profiles(&m)).transpose()? {
        Some(p) => {
            write_profiles(dir, &p)?;
            Ok(Some(p))
        }
        None => {
            log::info!("no known optimum for {}; skipping profiles", cfg.name);
            Ok(None)
        }
    }
}

/// Writes `profiles.csv` and `auc.csv`.
pub fn write_profiles(dir: &Path, p: &Profiles) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("profiles.csv"))?;
    w.write_record(["method", "rho", "profile"])?;
    for (a, m) in p.methods.iter().enumerate() {
        for (k, rho) in p.rho.iter().enumerate() {
            w.write_record([m.clone(), rho.to_string(), p.curves[a][k].to_string()])?;
        }
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("auc.csv"))?;
    w.write_record(["method", "auc"])?;
    for (m, auc) in p.methods.iter().zip(&p.auc) {
        w.write_record([m.clone(), auc.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct RunRow {
    method: String,
    run: usize,
    t: Option<f64>,
}

/// Pools the experiments of several result directories into one matrix.
/// Every directory must contain the same set of methods; the method order
/// of the first one is kept.
pub fn read_profile_matrix<P: AsRef<Path>>(dirs: &[P]) -> Result<ProfileMatrix> {
    let mut matrix: Option<ProfileMatrix> = None;
    for dir in dirs {
        let dir = dir.as_ref();
        let cfg = ExperimentConfig::load(&dir.join(MANIFEST))?;
        let methods: Vec<String> = cfg.methods.iter().map(|m| m.name().to_string()).collect();
        let m = matrix.get_or_insert_with(|| ProfileMatrix::new(methods.clone()));
        let mut sorted_a = methods.clone();
        let mut sorted_b = m.methods.clone();
        sorted_a.sort();
        sorted_b.sort();
        if sorted_a != sorted_b {
            return Err(Error::Config(format!("{} has methods {methods:?}, expected {:?}", dir.display(), m.methods)));
        }

        let mut runs: BTreeMap<usize, BTreeMap<String, f64>> = BTreeMap::new();
        let mut reader = csv::Reader::from_path(dir.join(RUNS))?;
        for row in reader.deserialize() {
            let row: RunRow = row?;
            let t = row.t.ok_or_else(|| {
                Error::Config(format!("{}: run {} of {} has no known optimum", dir.display(), row.run, row.method))
            })?;
            runs.entry(row.run).or_default().insert(row.method, t);
        }
        for (run, by_method) in runs {
            let row =
                m.methods
                    .iter()
                    .map(|name| {
                        by_method.get(name).copied().ok_or_else(|| {
                            Error::Config(format!("{}: run {run} is missing method {name}", dir.display()))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
            m.push(cfg.budget, row)?;
        }
    }
    matrix.filter(|m| m.experiments() > 0).ok_or(Error::EmptyProfile)
}
