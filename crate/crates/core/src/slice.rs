//! Univariate slice sampling with stepping-out and shrinkage.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceSampler {
    /// Initial bracket width.
    pub width: f64,
    /// Maximum number of step-outs, split randomly between the two sides.
    pub max_steps: usize,
}

impl Default for SliceSampler {
    fn default() -> Self {
        SliceSampler { width: 1.0, max_steps: 10 }
    }
}

impl SliceSampler {
    /// One update of `x0` targeting the (unnormalized) log-density `log_p`.
    /// Non-finite values of `log_p` are treated as zero density.
    pub fn sample<F, R>(&self, x0: f64, mut log_p: F, rng: &mut R) -> f64
    where
        F: FnMut(f64) -> f64,
        R: Rng + ?Sized,
    {
        let mut eval = |x: f64| {
            let v = log_p(x);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        };
        let e: f64 = Exp1.sample(rng);
        let level = eval(x0) - e;

        let u: f64 = rng.random();
        let mut left = x0 - self.width * u;
        let mut right = left + self.width;
        let v: f64 = rng.random();
        let mut j = (self.max_steps as f64 * v).floor() as usize;
        let mut k = self.max_steps.saturating_sub(1).saturating_sub(j);
        while j > 0 && level < eval(left) {
            left -= self.width;
            j -= 1;
        }
        while k > 0 && level < eval(right) {
            right += self.width;
            k -= 1;
        }

        loop {
            let u: f64 = rng.random();
            let x1 = left + u * (right - left);
            if level < eval(x1) {
                return x1;
            }
            if x1 < x0 {
                left = x1;
            } else {
                right = x1;
            }
            if right - left < 1e-12 {
                return x0;
            }
        }
    }
}
