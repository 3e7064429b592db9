//! Closed-form benchmark objectives with known optima.
//!
//! Every registered optimizer location is re-evaluated by [`Benchmark::verify`]
//! so a transcription error in a formula or constant shows up immediately.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridIndex, GridSpace};

/// Default enumeration cap for [`grid_optimum`].
pub const GRID_CAP: usize = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// Multiplier turning the objective into a maximization target.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Minimize => -1.0,
            Sense::Maximize => 1.0,
        }
    }

    /// Whether `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Minimize => a < b,
            Sense::Maximize => a > b,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: &'static str,
    pub bounds: Vec<(f64, f64)>,
    /// Grid points per dimension used by default.
    pub default_points: Vec<usize>,
    pub optimum: f64,
    pub optimizers: Vec<Vec<f64>>,
    pub sense: Sense,
    /// Absolute tolerance of the registration check.
    pub tolerance: f64,
    func: fn(&[f64]) -> f64,
}

impl Benchmark {
    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dims() || x.iter().zip(&self.bounds).any(|(v, (lo, hi))| !(lo <= v && v <= hi)) {
            return Err(Error::OutOfBounds { point: x.to_vec() });
        }
        Ok((self.func)(x))
    }

    pub fn default_grid(&self) -> Result<GridSpace> {
        GridSpace::uniform(&self.bounds, &self.default_points)
    }

    /// Re-evaluates every registered optimizer against the registered optimum.
    pub fn verify(&self) -> Result<()> {
        for x in &self.optimizers {
            let v = self.eval(x)?;
            if (v - self.optimum).abs() > self.tolerance {
                return Err(Error::Config(format!(
                    "{}: f({x:?}) = {v} differs from the registered optimum {}",
                    self.name, self.optimum
                )));
            }
        }
        Ok(())
    }
}

pub fn branin(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * x1.cos() + 10.0
}

fn sinc_at(t: f64) -> f64 {
    if t.abs() < 1e-12 {
        1.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

pub fn damavandi(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let ratio = sinc_at(x1 - 2.0) * sinc_at(x2 - 2.0);
    (1.0 - ratio.abs().powi(5)) * (2.0 + (x1 - 7.0).powi(2) + 2.0 * (x2 - 7.0).powi(2))
}

pub fn schaffer(x: &[f64]) -> f64 {
    let s = x[0] * x[0] + x[1] * x[1];
    0.5 + (s.sqrt().sin().powi(2) - 0.5) / (1.0 + 0.001 * s).powi(2)
}

pub fn griewank(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().map(|v| v * v / 4000.0).sum();
    let prod: f64 = x.iter().enumerate().map(|(d, v)| (v / ((d + 1) as f64).sqrt()).cos()).product();
    1.0 + sum - prod
}

const HARTMANN_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN_B: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];
const HARTMANN_C: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

pub fn hartmann6(x: &[f64]) -> f64 {
    -(0..4)
        .map(|j| {
            let e: f64 = (0..6).map(|d| HARTMANN_A[j][d] * (x[d] - HARTMANN_B[j][d]).powi(2)).sum();
            HARTMANN_C[j] * (-e).exp()
        })
        .sum::<f64>()
}

/// Nonstationary, nonseparable 2-D test surface on `[1, 2] x [-1, 0]`
/// (to be maximized).
pub fn intro2d(x: &[f64]) -> f64 {
    let f1 = |t: f64| t * ((2.0 * t).sin() + 2.0);
    let f2 = |t: f64| 0.2 * t * (99.0 * (t + 1.0) + 4.0).sqrt();
    let (x1, x2) = (x[0], x[1]);
    let wave = (4.0 * (f1(x1) + f2(x2))).cos() + (4.0 * (f1(x2) - f2(x1))).sin() - 1.0;
    wave * (-(x1 - 0.5).powi(2) + (x2 - 1.0).powi(2) / 5.0).exp()
}

/// Location and value of the maximum of [`intro2d`] on its domain, found by
/// dense enumeration followed by local refinement.
pub const INTRO2D_ARGMAX: [f64; 2] = [1.344241806794973, -0.08926399589549422];
pub const INTRO2D_MAX: f64 = 0.611075984045075;

pub const NAMES: [&str; 7] = ["branin", "damavandi", "schaffer", "griewank3", "griewank4", "hartmann6", "intro2d"];

fn griewank_n(d: usize) -> Benchmark {
    Benchmark {
        name: if d == 3 { "griewank3" } else { "griewank4" },
        bounds: vec![(-10.0, 10.0); d],
        default_points: vec![11; d],
        optimum: 0.0,
        optimizers: vec![vec![0.0; d]],
        sense: Sense::Minimize,
        tolerance: 1e-6,
        func: griewank,
    }
}

/// Looks up a registered benchmark and verifies its optimum.
pub fn by_name(name: &str) -> Result<Benchmark> {
    let b = match name {
        "branin" => Benchmark {
            name: "branin",
            bounds: vec![(-5.0, 10.0), (0.0, 15.0)],
            default_points: vec![14, 14],
            optimum: 0.3978873,
            optimizers: vec![vec![-PI, 12.275], vec![PI, 2.275], vec![3.0 * PI, 2.475]],
            sense: Sense::Minimize,
            tolerance: 1e-6,
            func: branin,
        },
        "damavandi" => Benchmark {
            name: "damavandi",
            bounds: vec![(0.0, 14.0); 2],
            default_points: vec![71, 71],
            optimum: 0.0,
            optimizers: vec![vec![2.0, 2.0]],
            sense: Sense::Minimize,
            tolerance: 1e-6,
            func: damavandi,
        },
        "schaffer" => Benchmark {
            name: "schaffer",
            bounds: vec![(-10.0, 10.0); 2],
            default_points: vec![11, 11],
            optimum: 0.0,
            optimizers: vec![vec![0.0, 0.0]],
            sense: Sense::Minimize,
            tolerance: 1e-6,
            func: schaffer,
        },
        "griewank3" => griewank_n(3),
        "griewank4" => griewank_n(4),
        "hartmann6" => Benchmark {
            name: "hartmann6",
            bounds: vec![(0.0, 1.0); 6],
            default_points: vec![12; 6],
            optimum: -3.32237,
            optimizers: vec![vec![0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.657301]],
            sense: Sense::Minimize,
            tolerance: 1e-4,
            func: hartmann6,
        },
        "intro2d" => Benchmark {
            name: "intro2d",
            bounds: vec![(1.0, 2.0), (-1.0, 0.0)],
            default_points: vec![40, 40],
            optimum: INTRO2D_MAX,
            optimizers: vec![INTRO2D_ARGMAX.to_vec()],
            sense: Sense::Maximize,
            tolerance: 1e-6,
            func: intro2d,
        },
        other => return Err(Error::UnknownBenchmark(other.to_string())),
    };
    b.verify()?;
    Ok(b)
}

/// Verifies every registered benchmark.
pub fn verify_all() -> Result<Vec<Benchmark>> {
    NAMES.iter().map(|n| by_name(n)).collect()
}

/// Exhaustive search for the best on-grid value, ties to the lowest flat index.
pub fn grid_optimum(b: &Benchmark, grid: &GridSpace, cap: usize) -> Result<(GridIndex, f64)> {
    if grid.dims() != b.dims() {
        return Err(Error::invalid(format!("{}-D grid for the {}-D function {}", grid.dims(), b.dims(), b.name)));
    }
    if grid.len() > cap {
        return Err(Error::TooLarge { entries: grid.len(), cap });
    }
    let sense = b.sense;
    let (flat, value) = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let ix = grid.unflatten(flat).expect("flat index within grid");
            let x = grid.point(&ix).expect("index within grid");
            (flat, (b.func)(&x))
        })
        .reduce(
            || (usize::MAX, f64::NAN),
            |a, c| {
                let pick_c =
                    a.0 == usize::MAX || (c.0 != usize::MAX && (sense.better(c.1, a.1) || (c.1 == a.1 && c.0 < a.0)));
                if pick_c {
                    c
                } else {
                    a
                }
            },
        );
    Ok((grid.unflatten(flat)?, value))
}
