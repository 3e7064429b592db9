//! Experiment configuration, read from TOML.
//!
//! ```toml
//! name = "damavandi"
//! methods = ["bktf", "gp-ei", "gp-ucb"]
//! replications = 10
//! seed = 7
//! budget = 50
//!
//! [objective]
//! function = "damavandi"
//!
//! [bktf]
//! acquisition = "running-max"
//! ```
//!
//! Every other field has a default; see the field docs below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchfns::Sense;
use crate::bktf::SummaryMode;
use crate::error::{Error, Result};
use crate::gp::EiVariant;
use crate::kernels::KernelFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Bktf,
    GpEi,
    GpUcb,
    GpgridEi,
    GpgridUcb,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Bktf, Method::GpEi, Method::GpUcb, Method::GpgridEi, Method::GpgridUcb];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bktf => "bktf",
            Method::GpEi => "gp-ei",
            Method::GpUcb => "gp-ucb",
            Method::GpgridEi => "gpgrid-ei",
            Method::GpgridUcb => "gpgrid-ucb",
        }
    }

    pub fn from_name(name: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Whether queries are restricted to the grid.
    pub fn on_grid(self) -> bool {
        !matches!(self, Method::GpEi | Method::GpUcb)
    }

    /// Stable lane used when deriving this method's random stream.
    pub(crate) fn lane(self) -> u64 {
        match self {
            Method::Bktf => 1,
            Method::GpEi => 2,
            Method::GpUcb => 3,
            Method::GpgridEi => 4,
            Method::GpgridUcb => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    /// Registered benchmark name. Exclusive with `command`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    /// External program speaking the line protocol, as argv.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Vec<String>>,
    /// Search box; required for external objectives.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sense: Option<Sense>,
    /// Known optimum, used for the error column and solve detection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimum: Option<f64>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

fn default_timeout() -> f64 {
    600.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Points per dimension; defaults to the benchmark's grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BktfSection {
    pub rank: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub acquisition: SummaryMode,
    /// Exploration weight of the mean/variance acquisition.
    pub beta: f64,
    pub tie_lengthscales: bool,
    pub kernel: KernelFamily,
    pub warm_start: bool,
}

impl Default for BktfSection {
    fn default() -> Self {
        BktfSection {
            rank: 2,
            iterations: 400,
            burn_in: 200,
            acquisition: SummaryMode::RunningMax,
            beta: 2.0,
            tie_lengthscales: false,
            kernel: KernelFamily::Matern32,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorSection {
    pub mu_l: f64,
    pub tau_l: f64,
    pub a0: f64,
    pub b0: f64,
}

impl Default for PriorSection {
    fn default() -> Self {
        PriorSection { mu_l: 0.5f64.ln(), tau_l: 2.0, a0: 1e-6, b0: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpSection {
    pub beta: f64,
    pub ei: EiVariant,
    pub direct_budget: usize,
    pub direct_epsilon: f64,
    pub restarts: usize,
    pub polish_iters: usize,
}

impl Default for GpSection {
    fn default() -> Self {
        GpSection {
            beta: 2.0,
            ei: EiVariant::Verbatim,
            direct_budget: 2000,
            direct_epsilon: 1e-4,
            restarts: 5,
            polish_iters: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSection {
    /// Absolute error at which a run counts as solved.
    pub tolerance: f64,
    /// Largest grid enumerated to find the grid-attainable optimum.
    pub enumeration_cap: usize,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection { tolerance: 1e-6, enumeration_cap: crate::benchfns::GRID_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub methods: Vec<Method>,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Initial design size; defaults to the input dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_init: Option<usize>,
    /// Number of BO iterations after the initial design.
    pub budget: usize,
    /// Record wall time per iteration. Off by default so reruns produce
    /// identical files.
    #[serde(default)]
    pub timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub bktf: BktfSection,
    #[serde(default)]
    pub priors: PriorSection,
    #[serde(default)]
    pub gp: GpSection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.n_init == Some(0) {
            return bad("n_init must be at least 1".into());
        }
        match (&self.objective.function, &self.objective.command) {
            (Some(_), Some(_)) => return bad("objective takes either `function` or `command`, not both".into()),
            (None, None) => return bad("objective needs `function` or `command`".into()),
            (None, Some(cmd)) => {
                if cmd.is_empty() {
                    return bad("objective command is empty".into());
                }
                if self.objective.bounds.is_none() {
                    return bad("external objectives need `bounds`".into());
                }
            }
            (Some(_), None) => {}
        }
        if let Some(b) = &self.objective.bounds {
            if b.is_empty() || b.iter().any(|(lo, hi)| !(lo < hi)) {
                return bad("bounds must be non-empty with lo < hi".into());
            }
        }
        if !(self.objective.timeout_secs > 0.0) {
            return bad("timeout_secs must be positive".into());
        }
        if self.bktf.rank == 0 {
            return bad("bktf.rank must be at least 1".into());
        }
        if self.bktf.burn_in >= self.bktf.iterations {
            return bad("bktf.burn_in must be smaller than bktf.iterations".into());
        }
        if !(self.priors.tau_l > 0.0 && self.priors.a0 > 0.0 && self.priors.b0 > 0.0) {
            return bad("priors tau_l, a0 and b0 must be positive".into());
        }
        if self.gp.direct_budget == 0 {
            return bad("gp.direct_budget must be at least 1".into());
        }
        if !(self.evaluation.tolerance >= 0.0) {
            return bad("evaluation.tolerance must be non-negative".into());
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return bad("methods contain duplicates".into());
        }
        Ok(())
    }
}
