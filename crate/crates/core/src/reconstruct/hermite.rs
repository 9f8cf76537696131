//! Monotone piecewise-cubic Hermite interpolation.
//!
//! Node slopes come from five-point Lagrange differentiation (fourth order on
//! smooth data) and are then passed through the Fritsch–Carlson limiter so the
//! interpolant stays monotone wherever the data are.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

/// Derivative at `x0` of the Lagrange polynomial through `(xs, ys)`.
fn lagrange_derivative(xs: &[f64], ys: &[f64], x0: f64) -> f64 {
    let n = xs.len();
    let mut total = 0.0;
    for j in 0..n {
        // d/dx of the j-th basis polynomial
        let mut denom = 1.0;
        for m in 0..n {
            if m != j {
                denom *= xs[j] - xs[m];
            }
        }
        let mut num = 0.0;
        for k in 0..n {
            if k == j {
                continue;
            }
            let mut prod = 1.0;
            for m in 0..n {
                if m != j && m != k {
                    prod *= x0 - xs[m];
                }
            }
            num += prod;
        }
        total += ys[j] * num / denom;
    }
    total
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::invalid(
                "interpolation needs at least two matching nodes",
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "interpolation nodes must be strictly increasing",
            ));
        }
        let width = 5.min(n);
        let mut slopes: Vec<f64> = (0..n)
            .map(|i| {
                let start = i.saturating_sub(width / 2).min(n - width);
                let r = start..start + width;
                lagrange_derivative(&xs[r.clone()], &ys[r], xs[i])
            })
            .collect();

        let secants: Vec<f64> = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        for (k, &d) in secants.iter().enumerate() {
            let prev_ok = k == 0 || secants[k - 1] * d > 0.0;
            if d == 0.0 {
                slopes[k] = 0.0;
                slopes[k + 1] = 0.0;
                continue;
            }
            if !prev_ok && k > 0 {
                slopes[k] = 0.0;
            }
            let a = slopes[k] / d;
            let b = slopes[k + 1] / d;
            if a < 0.0 {
                slopes[k] = 0.0;
            }
            if b < 0.0 {
                slopes[k + 1] = 0.0;
            }
            let s = a * a + b * b;
            if s > 9.0 {
                let t = 3.0 / s.sqrt();
                slopes[k] = t * a * d;
                slopes[k + 1] = t * b * d;
            }
        }
        Ok(MonotoneCubic { xs, ys, slopes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    fn segment(&self, x: f64) -> Option<usize> {
        let n = self.xs.len();
        if !(x >= self.xs[0] && x <= self.xs[n - 1]) {
            return None;
        }
        let k = self.xs.partition_point(|&v| v <= x);
        Some(k.clamp(1, n - 1) - 1)
    }

    /// Value and first derivative at `x`, or `None` outside the node range.
    pub fn eval(&self, x: f64) -> Option<(f64, f64)> {
        let k = self.segment(x)?;
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let dv = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        Some((v, dv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_smooth_functions() {
        let xs: Vec<f64> = (0..=200).map(|i| 0.5 + i as f64 * 0.01).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let c = MonotoneCubic::new(xs, ys).unwrap();
        for &x in &[0.503, 1.0, 1.777, 2.5] {
            let (v, d) = c.eval(x).unwrap();
            assert!((v - x.ln()).abs() < 1e-8, "{x}");
            assert!((d - 1.0 / x).abs() < 1e-5, "{x}");
        }
        assert!(c.eval(0.49).is_none());
    }

    #[test]
    fn stays_monotone_on_steps() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let c = MonotoneCubic::new(xs, ys).unwrap();
        let mut last = f64::NEG_INFINITY;
        for i in 0..=500 {
            let (v, _) = c.eval(i as f64 * 0.01).unwrap();
            assert!(v >= last - 1e-15);
            last = v;
        }
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(MonotoneCubic::new(vec![0.0], vec![1.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }
}
