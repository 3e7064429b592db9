use rayon::prelude::*;

use super::CpState;
use crate::error::{Error, Result};

/// `sum_r lambda_r prod_d g_d^r[ix_d]`
pub fn predict_point(state: &CpState, ix: &[usize]) -> Result<f64> {
    let shape = state.shape();
    if ix.len() != shape.len() || ix.iter().zip(&shape).any(|(i, m)| i >= m) {
        return Err(Error::IndexOutOfRange { index: ix.to_vec(), shape });
    }
    Ok(predict_unchecked(state, ix))
}

pub(crate) fn predict_unchecked(state: &CpState, ix: &[usize]) -> f64 {
    state
        .factors
        .iter()
        .zip(state.weights.iter())
        .map(|(fr, lam)| lam * fr.iter().zip(ix).map(|(g, &i)| g[i]).product::<f64>())
        .sum()
}

/// Dense row-major reconstruction of the full tensor.
pub fn reconstruct_tensor(state: &CpState) -> Result<Vec<f64>> {
    let shape = state.shape();
    let len = shape
        .iter()
        .try_fold(1usize, |acc, &m| acc.checked_mul(m))
        .ok_or_else(|| Error::GridOverflow(shape.clone()))?;
    let mut out = Vec::new();
    out.try_reserve_exact(len).map_err(|_| Error::TooLarge { entries: len, cap: 0 })?;
    out.resize(len, 0.0);
    reconstruct_into(state, &mut out);
    Ok(out)
}

/// Entries handed to one parallel task.
const BLOCK_ENTRIES: usize = 1 << 14;

/// Rows (runs along the last dimension) per parallel block.
pub(crate) fn rows_per_block(shape: &[usize]) -> usize {
    (BLOCK_ENTRIES / shape[shape.len() - 1]).max(1)
}

/// Writes the reconstruction into `out`, whose length must equal the number
/// of grid entries.
pub fn reconstruct_into(state: &CpState, out: &mut [f64]) {
    let shape = state.shape();
    let last = shape[shape.len() - 1];
    let rows = rows_per_block(&shape);
    debug_assert_eq!(out.len(), shape.iter().product::<usize>());
    out.par_chunks_mut(last * rows)
        .enumerate()
        .for_each(|(block, chunk)| fill_rows(state, &shape, block * rows, chunk));
}

/// Fills `out` (a whole number of rows along the last dimension) with the
/// reconstruction starting at row `first_row`.
pub(crate) fn fill_rows(state: &CpState, shape: &[usize], first_row: usize, out: &mut [f64]) {
    let d = shape.len();
    let last = shape[d - 1];
    let mut ix = vec![0usize; d - 1];
    let mut rem = first_row;
    for h in (0..d - 1).rev() {
        ix[h] = rem % shape[h];
        rem /= shape[h];
    }
    let tails: Vec<&[f64]> = state.factors.iter().map(|fr| fr[d - 1].as_slice()).collect();
    // lambda_r times the factors of every dimension but the last two; only
    // recomputed when one of those indices moves
    let mut prefix = vec![0.0; state.rank()];
    let refresh = |prefix: &mut [f64], ix: &[usize]| {
        for ((p, fr), &lam) in prefix.iter_mut().zip(&state.factors).zip(state.weights.iter()) {
            *p = lam;
            for h in 0..d.saturating_sub(2) {
                *p *= fr[h][ix[h]];
            }
        }
    };
    refresh(&mut prefix, &ix);
    for chunk in out.chunks_exact_mut(last) {
        chunk.fill(0.0);
        for ((fr, &pre), tail) in state.factors.iter().zip(&prefix).zip(&tails) {
            let p = if d >= 2 { pre * fr[d - 2][ix[d - 2]] } else { pre };
            for (v, g) in chunk.iter_mut().zip(tail.iter()) {
                *v += p * g;
            }
        }
        if d >= 2 {
            ix[d - 2] += 1;
            if ix[d - 2] < shape[d - 2] {
                continue;
            }
            ix[d - 2] = 0;
        }
        for h in (0..d.saturating_sub(2)).rev() {
            ix[h] += 1;
            if ix[h] < shape[h] {
                break;
            }
            ix[h] = 0;
        }
        refresh(&mut prefix, &ix);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn state_from(factors: Vec<Vec<Vec<f64>>>, weights: Vec<f64>) -> CpState {
        let rank = weights.len();
        let dims = factors[0].len();
        CpState {
            factors: factors.into_iter().map(|fr| fr.into_iter().map(DVector::from_vec).collect()).collect(),
            weights: DVector::from_vec(weights),
            tau: 1.0,
            lengthscales: vec![vec![0.5; dims]; rank],
            tie_lengthscales: false,
        }
    }

    #[test]
    fn hand_multiplication() {
        let s = state_from(vec![vec![vec![1.0, 2.0], vec![3.0, 4.0]]], vec![2.0]);
        assert_eq!(predict_point(&s, &[1, 1]).unwrap(), 16.0);
        assert!(predict_point(&s, &[2, 0]).is_err());
    }

    #[test]
    fn zero_weights_give_zero_tensor() {
        let s = state_from(vec![vec![vec![1.0, 2.0], vec![3.0, 4.0, 5.0]]; 2], vec![0.0, 0.0]);
        assert!(reconstruct_tensor(&s).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(predict_point(&s, &[1, 2]).unwrap(), 0.0);
    }

    #[test]
    fn rank_one_is_scaled_outer_product() {
        let a = vec![1.0, -2.0, 0.5];
        let b = vec![3.0, 4.0];
        let s = state_from(vec![vec![a.clone(), b.clone()]], vec![1.5]);
        let t = reconstruct_tensor(&s).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(t[i * 2 + j], 1.5 * a[i] * b[j]);
            }
        }
    }

    #[test]
    fn one_dimensional() {
        let s = state_from(vec![vec![vec![1.0, 2.0, 3.0]], vec![vec![0.5, 0.5, 0.5]]], vec![2.0, -1.0]);
        assert_eq!(reconstruct_tensor(&s).unwrap(), vec![1.5, 3.5, 5.5]);
    }

    proptest! {
        #[test]
        fn matches_naive_triple_loop(vals in proptest::collection::vec(-2.0f64..2.0, 2 * (3 + 4 + 5) + 2)) {
            let mut it = vals.into_iter();
            let mut factors = Vec::new();
            for _ in 0..2 {
                let mut fr = Vec::new();
                for m in [3usize, 4, 5] {
                    fr.push((0..m).map(|_| it.next().unwrap()).collect::<Vec<_>>());
                }
                factors.push(fr);
            }
            let weights = vec![it.next().unwrap(), it.next().unwrap()];
            let s = state_from(factors.clone(), weights.clone());
            let t = reconstruct_tensor(&s).unwrap();
            for i in 0..3 {
                for j in 0..4 {
                    for k in 0..5 {
                        let mut want = 0.0;
                        for r in 0..2 {
                            want += weights[r] * factors[r][0][i] * factors[r][1][j] * factors[r][2][k];
                        }
                        let flat = (i * 4 + j) * 5 + k;
                        prop_assert!((t[flat] - want).abs() < 1e-12);
                        prop_assert!((predict_point(&s, &[i, j, k]).unwrap() - t[flat]).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
