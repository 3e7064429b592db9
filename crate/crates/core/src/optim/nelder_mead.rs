//! Box-constrained Nelder–Mead. Trial points are projected onto the box.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iters: usize,
    /// Edge length of the initial simplex.
    pub initial_edge: f64,
    /// Stop once every vertex is within this distance of the best one.
    pub min_diameter: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iters: 200,
            initial_edge: 0.05,
            min_diameter: 1e-8,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

/// `D + 1` vertices kept sorted best to worst.
#[derive(Debug, Clone)]
pub struct Simplex {
    pub vertices: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl Simplex {
    fn sort(&mut self) {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.vertices = order.iter().map(|&i| self.vertices[i].clone()).collect();
        self.values = order.iter().map(|&i| self.values[i]).collect();
    }

    pub fn diameter(&self) -> f64 {
        let best = &self.vertices[0];
        self.vertices[1..]
            .iter()
            .map(|v| v.iter().zip(best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// Minimizes `obj` from `x0` inside `bounds`.
pub fn nelder_mead_minimize<F>(
    mut obj: F,
    x0: &[f64],
    bounds: &[(f64, f64)],
    opts: &NelderMeadOptions,
) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(bounds.len(), n, "one bound per coordinate");
    let mut eval = |x: &[f64]| {
        let v = obj(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut start = x0.to_vec();
    project(&mut start, bounds);
    let mut vertices = vec![start.clone()];
    for d in 0..n {
        let mut v = start.clone();
        let (lo, hi) = bounds[d];
        v[d] = if start[d] + opts.initial_edge <= hi || start[d] - opts.initial_edge < lo {
            (start[d] + opts.initial_edge).min(hi)
        } else {
            start[d] - opts.initial_edge
        };
        vertices.push(v);
    }
    let values = vertices.iter().map(|v| eval(v)).collect();
    let mut s = Simplex { vertices, values };
    s.sort();

    let mut iterations = 0;
    while iterations < opts.max_iters && s.diameter() >= opts.min_diameter {
        iterations += 1;
        let worst = n;
        let mut centroid = vec![0.0; n];
        for v in &s.vertices[..worst] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&s.vertices[worst]).map(|(c, w)| c + t * (c - w)).collect();
            project(&mut p, bounds);
            p
        };

        let xr = along(opts.reflection);
        let fr = eval(&xr);
        if fr < s.values[0] {
            let xe = along(opts.reflection * opts.expansion);
            let fe = eval(&xe);
            if fe < fr {
                s.vertices[worst] = xe;
                s.values[worst] = fe;
            } else {
                s.vertices[worst] = xr;
                s.values[worst] = fr;
            }
        } else if fr < s.values[worst - 1] {
            s.vertices[worst] = xr;
            s.values[worst] = fr;
        } else {
            let (xc, fc) = if fr < s.values[worst] {
                let xc = along(opts.reflection * opts.contraction);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-opts.contraction);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < s.values[worst].min(fr) {
                s.vertices[worst] = xc;
                s.values[worst] = fc;
            } else {
                let best = s.vertices[0].clone();
                for i in 1..=n {
                    let mut v: Vec<f64> =
                        best.iter().zip(&s.vertices[i]).map(|(b, x)| b + opts.shrink * (x - b)).collect();
                    project(&mut v, bounds);
                    s.values[i] = eval(&v);
                    s.vertices[i] = v;
                }
            }
        }
        s.sort();
    }
    NelderMeadResult { x: s.vertices[0].clone(), value: s.values[0], iterations }
}

/// Maximizing wrapper around [`nelder_mead_minimize`].
pub fn nelder_mead_maximize<F>(
    mut obj: F,
    x0: &[f64],
    bounds: &[(f64, f64)],
    opts: &NelderMeadOptions,
) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let mut r = nelder_mead_minimize(|x| -obj(x), x0, bounds, opts);
    r.value = -r.value;
    r
}
