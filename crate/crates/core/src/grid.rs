//! Discretized search spaces.
//!
//! A [`GridSpace`] is the Cartesian product of per-dimension coordinate
//! sets. Entries of the implied dense tensor are addressed either by a
//! [`GridIndex`] (one position per dimension) or by a row-major flat index,
//! where the last dimension varies fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-dimension positions into a [`GridSpace`], 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridIndex(pub Vec<usize>);

impl GridIndex {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<usize>> for GridIndex {
    fn from(v: Vec<usize>) -> Self {
        GridIndex(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpace {
    coords: Vec<Vec<f64>>,
    bounds: Vec<(f64, f64)>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl GridSpace {
    /// Builds a grid from explicit (possibly irregular) coordinates.
    pub fn new(bounds: Vec<(f64, f64)>, coords: Vec<Vec<f64>>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one dimension".into()));
        }
        if bounds.len() != coords.len() {
            return Err(Error::InvalidGrid(format!("{} bounds for {} coordinate sets", bounds.len(), coords.len())));
        }
        for (d, (&(lo, hi), c)) in bounds.iter().zip(&coords).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidGrid(format!("dimension {d}: empty interval [{lo}, {hi}]")));
            }
            if c.len() < 2 {
                return Err(Error::InvalidGrid(format!("dimension {d}: need at least 2 points")));
            }
            if c.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidGrid(format!("dimension {d}: coordinates not strictly increasing")));
            }
            if c[0] < lo || c[c.len() - 1] > hi {
                return Err(Error::InvalidGrid(format!("dimension {d}: coordinates outside bounds")));
            }
        }
        let shape: Vec<usize> = coords.iter().map(Vec::len).collect();
        let mut strides = vec![1usize; shape.len()];
        let mut len = 1usize;
        for d in (0..shape.len()).rev() {
            strides[d] = len;
            len = len.checked_mul(shape[d]).ok_or_else(|| Error::GridOverflow(shape.clone()))?;
        }
        Ok(GridSpace { coords, bounds, shape, strides, len })
    }

    /// Evenly spaced grid including both interval endpoints.
    pub fn uniform(bounds: &[(f64, f64)], points: &[usize]) -> Result<Self> {
        if bounds.len() != points.len() {
            return Err(Error::InvalidGrid(format!("{} bounds for {} point counts", bounds.len(), points.len())));
        }
        let mut coords = Vec::with_capacity(bounds.len());
        for (d, (&(lo, hi), &m)) in bounds.iter().zip(points).enumerate() {
            if m < 2 {
                return Err(Error::InvalidGrid(format!("dimension {d}: need at least 2 points")));
            }
            if !(lo < hi) {
                return Err(Error::InvalidGrid(format!("dimension {d}: empty interval [{lo}, {hi}]")));
            }
            let span = hi - lo;
            let last = (m - 1) as f64;
            let mut c: Vec<f64> = (0..m).map(|i| lo + span * i as f64 / last).collect();
            c[m - 1] = hi;
            coords.push(c);
        }
        GridSpace::new(bounds.to_vec(), coords)
    }

    pub fn dims(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Total number of entries, the product of the per-dimension counts.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn coords(&self, d: usize) -> &[f64] {
        &self.coords[d]
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Coordinates of dimension `d` mapped onto `[0, 1]`.
    pub fn unit_coords(&self, d: usize) -> Vec<f64> {
        let (lo, hi) = self.bounds[d];
        self.coords[d].iter().map(|c| (c - lo) / (hi - lo)).collect()
    }

    pub fn all_unit_coords(&self) -> Vec<Vec<f64>> {
        (0..self.dims()).map(|d| self.unit_coords(d)).collect()
    }

    fn check(&self, ix: &[usize]) -> Result<()> {
        if ix.len() != self.dims() || ix.iter().zip(&self.shape).any(|(i, m)| i >= m) {
            return Err(Error::IndexOutOfRange { index: ix.to_vec(), shape: self.shape.clone() });
        }
        Ok(())
    }

    pub fn flat_index(&self, ix: &GridIndex) -> Result<usize> {
        self.check(&ix.0)?;
        Ok(ix.0.iter().zip(&self.strides).map(|(i, s)| i * s).sum())
    }

    pub fn unflatten(&self, flat: usize) -> Result<GridIndex> {
        if flat >= self.len {
            return Err(Error::IndexOutOfRange { index: vec![flat], shape: self.shape.clone() });
        }
        let mut rem = flat;
        let ix = self
            .strides
            .iter()
            .map(|s| {
                let i = rem / s;
                rem %= s;
                i
            })
            .collect();
        Ok(GridIndex(ix))
    }

    /// Raw coordinates of a grid entry.
    pub fn point(&self, ix: &GridIndex) -> Result<Vec<f64>> {
        self.check(&ix.0)?;
        Ok(ix.0.iter().enumerate().map(|(d, &i)| self.coords[d][i]).collect())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims() && x.iter().zip(&self.bounds).all(|(v, &(lo, hi))| *v >= lo && *v <= hi)
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.bounds).map(|(v, &(lo, hi))| (v - lo) / (hi - lo)).collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.bounds).map(|(v, &(lo, hi))| lo + v * (hi - lo)).collect()
    }

    /// Nearest grid entry per dimension. Ties go to the lower index.
    pub fn snap(&self, x: &[f64]) -> Result<GridIndex> {
        if !self.contains(x) {
            return Err(Error::OutOfBounds { point: x.to_vec() });
        }
        let ix = x
            .iter()
            .zip(&self.coords)
            .map(|(&v, c)| {
                // first coordinate >= v
                let hi = c.partition_point(|&ci| ci < v);
                if hi == 0 {
                    0
                } else if hi == c.len() {
                    c.len() - 1
                } else if v - c[hi - 1] <= c[hi] - v {
                    hi - 1
                } else {
                    hi
                }
            })
            .collect();
        Ok(GridIndex(ix))
    }
}

/// Z-score normalization of objective values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub mean: f64,
    pub std: f64,
}

impl Normalizer {
    /// Fits mean and (population) standard deviation. Degenerate samples
    /// (fewer than two values, or all equal) get a unit scale.
    pub fn fit(values: &[f64]) -> Self {
        if values.is_empty() {
            return Normalizer { mean: 0.0, std: 1.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        let std = if std > 1e-12 * mean.abs().max(1.0) { std } else { 1.0 };
        Normalizer { mean, std }
    }

    pub fn normalize(&self, y: f64) -> f64 {
        (y - self.mean) / self.std
    }

    pub fn denormalize(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }

    pub fn normalize_all(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|&y| self.normalize(y)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn damavandi_grid_contains_two() {
        let g = GridSpace::uniform(&[(0.0, 14.0), (0.0, 14.0)], &[71, 71]).unwrap();
        assert_eq!(g.len(), 5041);
        assert!(g.coords(0).contains(&2.0));
        for w in g.coords(0).windows(2) {
            assert!((w[1] - w[0] - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn endpoints_only() {
        let g = GridSpace::uniform(&[(0.0, 1.0)], &[2]).unwrap();
        assert_eq!(g.coords(0), &[0.0, 1.0]);
    }

    #[test]
    fn branin_grid_size() {
        let g = GridSpace::uniform(&[(-5.0, 10.0), (0.0, 15.0)], &[14, 14]).unwrap();
        assert_eq!(g.len(), 196);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpace::uniform(&[(0.0, 1.0)], &[1]).is_err());
        assert!(GridSpace::uniform(&[(1.0, 1.0)], &[3]).is_err());
        assert!(GridSpace::new(vec![(0.0, 1.0)], vec![vec![0.0, 0.5, 0.5]]).is_err());
        assert!(GridSpace::new(vec![(0.0, 1.0)], vec![vec![0.0, 2.0]]).is_err());
        let huge = vec![(0.0, 1.0); 8];
        assert!(matches!(GridSpace::uniform(&huge, &[1 << 9; 8]), Err(Error::GridOverflow(_))));
    }

    #[test]
    fn flat_index_corners() {
        let g = GridSpace::uniform(&[(0.0, 1.0), (0.0, 1.0)], &[3, 4]).unwrap();
        assert_eq!(g.flat_index(&GridIndex(vec![0, 0])).unwrap(), 0);
        assert_eq!(g.flat_index(&GridIndex(vec![2, 3])).unwrap(), 11);
        assert!(g.flat_index(&GridIndex(vec![3, 0])).is_err());
        assert!(g.flat_index(&GridIndex(vec![0])).is_err());
        assert!(g.unflatten(12).is_err());
    }

    #[test]
    fn flat_index_exhaustive_small() {
        let g = GridSpace::uniform(&[(0.0, 1.0); 3], &[2, 3, 4]).unwrap();
        let mut expected = 0;
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    let ix = GridIndex(vec![i, j, k]);
                    assert_eq!(g.flat_index(&ix).unwrap(), expected);
                    assert_eq!(g.unflatten(expected).unwrap(), ix);
                    expected += 1;
                }
            }
        }
    }

    #[test]
    fn snap_rules() {
        let g = GridSpace::uniform(&[(0.0, 1.0)], &[6]).unwrap();
        assert_eq!(g.snap(&[0.4]).unwrap(), GridIndex(vec![2]));
        // midpoint between 0.0 and 0.2 goes low
        assert_eq!(g.snap(&[0.1]).unwrap(), GridIndex(vec![0]));
        assert!(g.snap(&[1.5]).is_err());
    }

    #[test]
    fn normalizer_degenerate() {
        let n = Normalizer::fit(&[3.0]);
        assert_eq!(n.std, 1.0);
        let n = Normalizer::fit(&[2.0, 2.0, 2.0]);
        assert_eq!(n.std, 1.0);
        assert_eq!(n.normalize(2.0), 0.0);
    }

    proptest! {
        #[test]
        fn snap_matches_linear_scan(m in 2usize..30, lo in -10.0f64..0.0, span in 0.1f64..20.0, t in 0.0f64..=1.0) {
            let g = GridSpace::uniform(&[(lo, lo + span)], &[m]).unwrap();
            let x = lo + t * span;
            let c = g.coords(0);
            let mut best = 0;
            for i in 1..m {
                if (x - c[i]).abs() < (x - c[best]).abs() {
                    best = i;
                }
            }
            prop_assert_eq!(g.snap(&[x]).unwrap().0[0], best);
        }

        #[test]
        fn snap_is_idempotent(m in 2usize..20, i in 0usize..20) {
            let g = GridSpace::uniform(&[(-3.0, 7.0), (0.0, 1.0)], &[m, 5]).unwrap();
            let ix = GridIndex(vec![i % m, i % 5]);
            let p = g.point(&ix).unwrap();
            prop_assert_eq!(g.snap(&p).unwrap(), ix);
        }

        #[test]
        fn uniform_coords_affine(m in 2usize..200, lo in -100.0f64..100.0, span in 1e-3f64..100.0) {
            let g = GridSpace::uniform(&[(lo, lo + span)], &[m]).unwrap();
            let step = span / (m - 1) as f64;
            for (i, c) in g.coords(0).iter().enumerate() {
                let want = lo + step * i as f64;
                prop_assert!((c - want).abs() <= 1e-12 * want.abs().max(span));
            }
        }

        #[test]
        fn flat_round_trip(shape in proptest::collection::vec(2usize..6, 1..5), seed in any::<u64>()) {
            let bounds = vec![(0.0, 1.0); shape.len()];
            let g = GridSpace::uniform(&bounds, &shape).unwrap();
            let flat = (seed as usize) % g.len();
            let ix = g.unflatten(flat).unwrap();
            prop_assert_eq!(g.flat_index(&ix).unwrap(), flat);
        }

        #[test]
        fn normalizer_round_trip(ys in proptest::collection::vec(-1e3f64..1e3, 2..20), probe in -1e3f64..1e3) {
            let n = Normalizer::fit(&ys);
            let back = n.denormalize(n.normalize(probe));
            prop_assert!((back - probe).abs() <= 1e-12 * probe.abs().max(1.0) * 10.0);
        }
    }
}
