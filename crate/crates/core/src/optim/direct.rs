//! DIRECT (DIviding RECTangles) global search on the unit hypercube.
//!
//! Rectangles are stored by their center and the number of times each side
//! has been trisected, so side lengths are exact powers of 1/3. Each round
//! selects the potentially optimal rectangles (lower-right convex hull of
//! size versus value, subject to the `epsilon` sufficient-decrease test) and
//! trisects them along their longest sides, the side with the best sample
//! being split first.

/// Hyper-rectangle in `[0, 1]^D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rect {
    pub center: Vec<f64>,
    /// Trisection count per dimension; the side length is `3^-level`.
    pub levels: Vec<u32>,
    /// Objective value at the center (minimization form).
    pub value: f64,
}

impl Rect {
    pub fn half_widths(&self) -> Vec<f64> {
        self.levels.iter().map(|&k| 0.5 * 3f64.powi(-(k as i32))).collect()
    }

    /// Center-to-vertex distance.
    pub fn size(&self) -> f64 {
        self.half_widths().iter().map(|h| h * h).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectOptions {
    /// Maximum number of objective evaluations.
    pub budget: usize,
    pub epsilon: f64,
}

impl Default for DirectOptions {
    fn default() -> Self {
        DirectOptions { budget: 2000, epsilon: 1e-4 }
    }
}

/// Maximizes `obj` over `[0, 1]^dims`. Returns the best point and its value.
pub fn direct_maximize<F>(mut obj: F, dims: usize, opts: &DirectOptions) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let (x, v) = direct_minimize(|x| -obj(x), dims, opts);
    (x, -v)
}

/// Minimizes `obj` over `[0, 1]^dims`.
pub fn direct_minimize<F>(mut obj: F, dims: usize, opts: &DirectOptions) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(dims >= 1, "DIRECT needs at least one dimension");
    let budget = opts.budget.max(1);
    let mut eval = |x: &[f64]| {
        let v = obj(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let center = vec![0.5; dims];
    let v0 = eval(&center);
    let mut evals = 1usize;
    let mut rects = vec![Rect { center, levels: vec![0; dims], value: v0 }];
    let mut best = 0usize;

    while evals < budget {
        let selected = potentially_optimal(&rects, rects[best].value, opts.epsilon);
        let before = evals;
        for idx in selected {
            if evals >= budget {
                break;
            }
            divide(&mut rects, idx, &mut eval, &mut evals, budget);
        }
        for (i, r) in rects.iter().enumerate() {
            if r.value < rects[best].value {
                best = i;
            }
        }
        if evals == before {
            break;
        }
    }
    let r = &rects[best];
    (r.center.clone(), r.value)
}

fn potentially_optimal(rects: &[Rect], fmin: f64, epsilon: f64) -> Vec<usize> {
    // best rectangle per distinct size
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for (i, r) in rects.iter().enumerate() {
        let s = r.size();
        match groups.iter_mut().find(|(gs, _)| (gs - s).abs() <= 1e-12 * s) {
            Some((_, j)) => {
                if r.value < rects[*j].value {
                    *j = i;
                }
            }
            None => groups.push((s, i)),
        }
    }
    groups.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let threshold = fmin - epsilon * fmin.abs();
    let mut out = Vec::new();
    for (k, &(dj, j)) in groups.iter().enumerate() {
        let fj = rects[j].value;
        let mut k_low = f64::NEG_INFINITY;
        for &(di, i) in &groups[..k] {
            k_low = k_low.max((fj - rects[i].value) / (dj - di));
        }
        let mut k_up = f64::INFINITY;
        for &(di, i) in &groups[k + 1..] {
            k_up = k_up.min((rects[i].value - fj) / (di - dj));
        }
        if k_up <= 0.0 || k_low > k_up {
            continue;
        }
        if k_up.is_finite() && fj - k_up * dj > threshold {
            continue;
        }
        out.push(j);
    }
    out
}

fn divide<F>(rects: &mut Vec<Rect>, idx: usize, eval: &mut F, evals: &mut usize, budget: usize)
where
    F: FnMut(&[f64]) -> f64,
{
    let min_level = *rects[idx].levels.iter().min().unwrap();
    let long_dims: Vec<usize> = (0..rects[idx].levels.len()).filter(|&d| rects[idx].levels[d] == min_level).collect();
    let delta = 3f64.powi(-(min_level as i32 + 1));

    // sample c +- delta e_i along every longest side
    let mut samples = Vec::new();
    for &d in &long_dims {
        if *evals + 2 > budget {
            break;
        }
        let mut lo = rects[idx].center.clone();
        lo[d] -= delta;
        let mut hi = rects[idx].center.clone();
        hi[d] += delta;
        let flo = eval(&lo);
        let fhi = eval(&hi);
        *evals += 2;
        samples.push(Sample { dim: d, lo, flo, hi, fhi });
    }
    // split the best dimension first so its samples get the largest boxes
    samples.sort_by(|a, b| a.flo.min(a.fhi).partial_cmp(&b.flo.min(b.fhi)).unwrap().then(a.dim.cmp(&b.dim)));
    let mut levels = rects[idx].levels.clone();
    for s in samples {
        levels[s.dim] += 1;
        rects.push(Rect { center: s.lo, levels: levels.clone(), value: s.flo });
        rects.push(Rect { center: s.hi, levels: levels.clone(), value: s.fhi });
    }
    rects[idx].levels = levels;
}

struct Sample {
    dim: usize,
    lo: Vec<f64>,
    flo: f64,
    hi: Vec<f64>,
    fhi: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn centered_paraboloid() {
        let opts = DirectOptions { budget: 500, ..Default::default() };
        let (x, v) = direct_maximize(|x| -x.iter().map(|t| (t - 0.5).powi(2)).sum::<f64>(), 2, &opts);
        assert!(x.iter().all(|t| (t - 0.5).abs() < 1e-2));
        assert!(v <= 0.0);
    }

    #[test]
    fn off_center_paraboloid() {
        let opts = DirectOptions { budget: 2000, ..Default::default() };
        let (x, _) = direct_maximize(|x| -(x[0] - 0.21).powi(2) - 2.0 * (x[1] - 0.83).powi(2), 2, &opts);
        assert!((x[0] - 0.21).abs() < 1e-2 && (x[1] - 0.83).abs() < 1e-2, "{x:?}");
    }

    #[test]
    fn budget_one_is_center() {
        let mut calls = 0;
        let opts = DirectOptions { budget: 1, ..Default::default() };
        let (x, v) = direct_maximize(
            |x| {
                calls += 1;
                x[0] + x[1] + x[2]
            },
            3,
            &opts,
        );
        assert_eq!(x, vec![0.5; 3]);
        assert_eq!(v, 1.5);
        assert_eq!(calls, 1);
    }

    #[test]
    fn respects_budget_and_is_deterministic() {
        let f = |x: &[f64]| (5.0 * x[0]).sin() * (3.0 * x[1]).cos();
        let mut calls = 0;
        let opts = DirectOptions { budget: 301, ..Default::default() };
        let a = direct_maximize(
            |x| {
                calls += 1;
                f(x)
            },
            2,
            &opts,
        );
        assert!(calls <= 301);
        let b = direct_maximize(f, 2, &opts);
        assert_eq!(a, b);
        assert_eq!(a.1, f(&a.0));
    }

    proptest! {
        #[test]
        fn stays_in_unit_cube(c in proptest::collection::vec(-3.0f64..3.0, 3), budget in 1usize..300) {
            let opts = DirectOptions { budget, ..Default::default() };
            let mut inside = true;
            direct_maximize(|x| {
                inside &= x.iter().all(|t| (0.0..=1.0).contains(t));
                x.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>()
            }, 3, &opts);
            prop_assert!(inside);
        }
    }
}
