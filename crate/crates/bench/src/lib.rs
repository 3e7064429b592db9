//! Fixtures shared by the benchmarks.

use bktf::benchfns;
use bktf::bktf::{BktfConfig, BktfModel, CpState, TrainingData};
use bktf::{GridSpace, Normalizer};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// BKTF model on a benchmark's grid with `n` random observations and a
/// prior draw of the state.
pub struct Fixture {
    pub grid: GridSpace,
    pub model: BktfModel,
    pub data: TrainingData,
    pub state: CpState,
}

pub fn fixture(function: &str, points: &[usize], n: usize, seed: u64) -> Fixture {
    let b = benchfns::by_name(function).unwrap();
    let grid = GridSpace::uniform(&b.bounds, points).unwrap();
    let model = BktfModel::new(BktfConfig::default(), &grid).unwrap();
    let mut rng = rng(seed);
    let mut indices = Vec::new();
    let mut y = Vec::new();
    for flat in index::sample(&mut rng, grid.len(), n) {
        let ix = grid.unflatten(flat).unwrap();
        y.push(-b.eval(&grid.point(&ix).unwrap()).unwrap());
        indices.push(ix.0);
    }
    let z = Normalizer::fit(&y).normalize_all(&y);
    let data = TrainingData::new(indices, z).unwrap();
    let state = model.init_state(&mut rng).unwrap();
    Fixture { grid, model, data, state }
}

/// Random points in the unit cube with a smooth response.
pub fn gp_data(n: usize, dims: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    use rand::Rng;
    let mut rng = rng(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..dims).map(|_| rng.random::<f64>()).collect()).collect();
    let y = x.iter().map(|p| p.iter().map(|v| (6.0 * v).sin()).sum()).collect();
    (x, y)
}
