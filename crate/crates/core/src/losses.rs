//! Convex loss oracles, seeded loss sequences and their reparameterized forms.

use crate::domains::{dot, lp_norm, Domain};
use crate::error::{check_dim, check_finite, Error, Result};
use crate::geometry::Reparameterization;
use crate::rng::{stream_rng, unit_direction, Stream};

/// A differentiable loss with value and gradient access.
#[derive(Debug, Clone, PartialEq)]
pub enum LossOracle {
    /// `f(x) = cᵀx`.
    Linear { c: Vec<f64> },
    /// `f(x) = (aᵀx − b)²`.
    Quadratic { a: Vec<f64>, b: f64 },
    /// `f̃(u) = f(q(u))`.
    Reparameterized {
        inner: Box<LossOracle>,
        q: Reparameterization,
    },
}

impl LossOracle {
    pub fn reparameterized(inner: LossOracle, q: Reparameterization) -> Self {
        LossOracle::Reparameterized {
            inner: Box::new(inner),
            q,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            LossOracle::Linear { c } => c.len(),
            LossOracle::Quadratic { a, .. } => a.len(),
            LossOracle::Reparameterized { inner, .. } => inner.dim(),
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        check_dim("loss argument", x.len(), self.dim())?;
        check_finite("loss argument", x)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(match self {
            LossOracle::Linear { c } => dot(c, x),
            LossOracle::Quadratic { a, b } => {
                let r = dot(a, x) - b;
                r * r
            }
            LossOracle::Reparameterized { inner, q } => inner.value(&q.forward(x)?)?,
        })
    }

    /// A (sub-)gradient at `x`.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(match self {
            LossOracle::Linear { c } => c.clone(),
            LossOracle::Quadratic { a, b } => {
                let r = 2.0 * (dot(a, x) - b);
                a.iter().map(|&ai| r * ai).collect()
            }
            LossOracle::Reparameterized { inner, q } => {
                let g = inner.grad(&q.forward(x)?)?;
                q.chain_gradient(x, &g)?
            }
        })
    }

    /// Largest gradient norm over `domain` (exact for the built-in kinds).
    pub fn max_grad_norm(&self, domain: &Domain) -> Result<f64> {
        match self {
            LossOracle::Linear { c } => Ok(lp_norm(c, 2.0)),
            LossOracle::Quadratic { a, b } => {
                let (lo, hi) = domain.linear_range(a)?;
                Ok(2.0 * lp_norm(a, 2.0) * (lo - b).abs().max((hi - b).abs()))
            }
            LossOracle::Reparameterized { .. } => Err(Error::config(
                "gradient bounds are defined for primal losses only",
            )),
        }
    }
}

/// Max over coordinates of `|analytic − central difference| / (1 + |analytic|)`.
pub fn grad_check(oracle: &LossOracle, x: &[f64], h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::invalid(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let g = oracle.grad(x)?;
    let mut probe = x.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = oracle.value(&probe)?;
        probe[i] = x[i] - h;
        let down = oracle.value(&probe)?;
        probe[i] = x[i];
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((g[i] - fd).abs() / (1.0 + g[i].abs()));
    }
    Ok(worst)
}

/// Generator kinds for loss sequences.
#[derive(Debug, Clone, PartialEq)]
pub enum LossKind {
    /// `c_t` uniform on the sphere of radius `G_F`.
    RandomLinear,
    /// `c_t = (−1)^t c₀`; `c₀` defaults to `G_F e₁`.
    AlternatingLinear { c0: Option<Vec<f64>> },
    /// `c_t = c₀` every round; `c₀` defaults to `G_F e₁`.
    FixedLinear { c0: Option<Vec<f64>> },
    /// `(aᵀx − b)²` every round; `a` defaults to `(1, 2, …, d)` and `b` to 0.6.
    FixedQuadratic { a: Option<Vec<f64>>, b: f64 },
}

impl LossKind {
    pub fn zero() -> Self {
        LossKind::FixedLinear {
            c0: Some(Vec::new()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::RandomLinear => "random-linear",
            LossKind::AlternatingLinear { .. } => "alternating-linear",
            LossKind::FixedLinear { .. } => "fixed-linear",
            LossKind::FixedQuadratic { .. } => "fixed-quadratic",
        }
    }
}

/// Everything needed to replay a loss sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSequence {
    pub kind: LossKind,
    pub horizon: usize,
    pub dim: usize,
    /// Gradient bound `G_F`.
    pub grad_bound: f64,
    pub seed: u64,
}

/// A materialized sequence `f_1, …, f_T` bound to the description that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Losses {
    pub spec: LossSequence,
    pub oracles: Vec<LossOracle>,
}

impl Losses {
    pub fn horizon(&self) -> usize {
        self.oracles.len()
    }

    /// Oracle of round `t` (1-based).
    pub fn at(&self, t: usize) -> &LossOracle {
        &self.oracles[t - 1]
    }

    pub fn is_zero(&self) -> bool {
        self.oracles.iter().all(|o| match o {
            LossOracle::Linear { c } => c.iter().all(|&v| v == 0.0),
            _ => false,
        })
    }
}

impl LossSequence {
    pub fn new(kind: LossKind, horizon: usize, dim: usize, grad_bound: f64, seed: u64) -> Self {
        LossSequence {
            kind,
            horizon,
            dim,
            grad_bound,
            seed,
        }
    }

    fn first_axis(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        c[0] = self.grad_bound;
        c
    }

    fn linear_base(&self, c0: &Option<Vec<f64>>) -> Result<Vec<f64>> {
        let c = match c0 {
            Some(c) if c.is_empty() => vec![0.0; self.dim],
            Some(c) => {
                check_dim("loss vector", c.len(), self.dim)?;
                check_finite("loss vector", c)?;
                c.clone()
            }
            None => self.first_axis(),
        };
        if lp_norm(&c, 2.0) > self.grad_bound * (1.0 + 1e-12) {
            return Err(Error::config(format!(
                "loss vector norm {} exceeds the gradient bound {}",
                lp_norm(&c, 2.0),
                self.grad_bound
            )));
        }
        Ok(c)
    }

    /// Generate the oracles. Quadratics are rescaled so their gradients stay within `G_F` on `domain`.
    pub fn materialize(&self, domain: &Domain) -> Result<Losses> {
        if self.horizon == 0 {
            return Err(Error::config("loss sequence needs T >= 1"));
        }
        if self.dim == 0 {
            return Err(Error::config("loss sequence needs d >= 1"));
        }
        if !(self.grad_bound > 0.0 && self.grad_bound.is_finite()) {
            return Err(Error::config(format!(
                "gradient bound must be positive, got {}",
                self.grad_bound
            )));
        }
        check_dim("loss sequence domain", domain.dim(), self.dim)?;
        let oracles = match &self.kind {
            LossKind::RandomLinear => {
                let mut rng = stream_rng(self.seed, Stream::Losses);
                (0..self.horizon)
                    .map(|_| LossOracle::Linear {
                        c: unit_direction(&mut rng, self.dim)
                            .into_iter()
                            .map(|v| v * self.grad_bound)
                            .collect(),
                    })
                    .collect()
            }
            LossKind::AlternatingLinear { c0 } => {
                let c = self.linear_base(c0)?;
                let neg: Vec<f64> = c.iter().map(|v| -v).collect();
                (1..=self.horizon)
                    .map(|t| LossOracle::Linear {
                        c: if t % 2 == 1 { neg.clone() } else { c.clone() },
                    })
                    .collect()
            }
            LossKind::FixedLinear { c0 } => {
                let c = self.linear_base(c0)?;
                vec![LossOracle::Linear { c }; self.horizon]
            }
            LossKind::FixedQuadratic { a, b } => {
                let a = match a {
                    Some(a) => {
                        check_dim("quadratic coefficients", a.len(), self.dim)?;
                        check_finite("quadratic coefficients", a)?;
                        a.clone()
                    }
                    None => (1..=self.dim).map(|i| i as f64).collect(),
                };
                if !b.is_finite() {
                    return Err(Error::config("quadratic offset must be finite"));
                }
                let mut q = LossOracle::Quadratic { a, b: *b };
                let bound = q.max_grad_norm(domain)?;
                if bound > self.grad_bound {
                    // the gradient is quadratic in (a, b)
                    let s = (self.grad_bound / bound).sqrt();
                    if let LossOracle::Quadratic { a, b } = &mut q {
                        a.iter_mut().for_each(|v| *v *= s);
                        *b *= s;
                    }
                }
                vec![q; self.horizon]
            }
        };
        Ok(Losses {
            spec: self.clone(),
            oracles,
        })
    }
}

/// `½ xᵀHx + gᵀx + c` with dense `H`; the sum of a sequence of built-in losses.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub dim: usize,
    /// Row-major `d × d`.
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    pub c: f64,
}

impl QuadraticForm {
    pub fn zero(dim: usize) -> Self {
        QuadraticForm {
            dim,
            h: vec![0.0; dim * dim],
            g: vec![0.0; dim],
            c: 0.0,
        }
    }

    pub fn add(&mut self, oracle: &LossOracle) -> Result<()> {
        check_dim("quadratic form", oracle.dim(), self.dim)?;
        match oracle {
            LossOracle::Linear { c } => {
                self.g.iter_mut().zip(c).for_each(|(g, ci)| *g += ci);
            }
            LossOracle::Quadratic { a, b } => {
                let d = self.dim;
                for i in 0..d {
                    for j in 0..d {
                        self.h[i * d + j] += 2.0 * a[i] * a[j];
                    }
                    self.g[i] -= 2.0 * b * a[i];
                }
                self.c += b * b;
            }
            LossOracle::Reparameterized { .. } => {
                return Err(Error::config("only primal losses can be aggregated"))
            }
        }
        Ok(())
    }

    pub fn from_losses(losses: &Losses) -> Result<Self> {
        let mut q = QuadraticForm::zero(losses.spec.dim);
        for o in &losses.oracles {
            q.add(o)?;
        }
        Ok(q)
    }

    pub fn scaled(&self, s: f64) -> Self {
        QuadraticForm {
            dim: self.dim,
            h: self.h.iter().map(|v| v * s).collect(),
            g: self.g.iter().map(|v| v * s).collect(),
            c: self.c * s,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut quad = 0.0;
        for i in 0..d {
            quad += x[i] * dot(&self.h[i * d..(i + 1) * d], x);
        }
        0.5 * quad + dot(&self.g, x) + self.c
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| dot(&self.h[i * d..(i + 1) * d], x) + self.g[i])
            .collect()
    }

    /// Largest absolute row sum of `H`, an upper bound on its spectral norm.
    pub fn lipschitz_bound(&self) -> f64 {
        let d = self.dim;
        (0..d)
            .map(|i| {
                self.h[i * d..(i + 1) * d]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplex() -> Domain {
        Domain::simplex(2, 0.01).unwrap()
    }

    #[test]
    fn oracle_examples() {
        let l = LossOracle::Linear { c: vec![1.0, -1.0] };
        assert_eq!(l.value(&[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(l.grad(&[0.5, 0.5]).unwrap(), vec![1.0, -1.0]);
        let q = LossOracle::Quadratic {
            a: vec![1.0, 1.0],
            b: 1.0,
        };
        assert_eq!(q.value(&[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(q.grad(&[0.5, 0.5]).unwrap(), vec![0.0, 0.0]);
        let r = LossOracle::reparameterized(
            LossOracle::Linear { c: vec![1.0, 0.0] },
            Reparameterization::QuarterSquare,
        );
        assert_eq!(r.value(&[2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(r.grad(&[2.0, 2.0]).unwrap(), vec![1.0, 0.0]);
        assert!(grad_check(&r, &[2.0, 2.0], 1e-6).unwrap() < 1e-5);
    }

    #[test]
    fn oracles_reject_bad_points() {
        let l = LossOracle::Linear { c: vec![1.0, -1.0] };
        assert!(matches!(l.value(&[0.5]), Err(Error::InvalidInput(_))));
        let r = LossOracle::reparameterized(l, Reparameterization::QuarterSquare);
        assert!(r.value(&[-1.0, 0.0]).is_err());
    }

    #[test]
    fn grad_check_examples() {
        let l = LossOracle::Linear { c: vec![0.3, -0.7] };
        assert!(grad_check(&l, &[0.2, 0.5], 1e-6).unwrap() <= 1e-9);
        let q = LossOracle::Quadratic {
            a: vec![1.0, 2.0],
            b: 0.6,
        };
        assert!(grad_check(&q, &[0.3, 0.4], 1e-6).unwrap() <= 1e-6);
    }

    #[test]
    fn alternating_signs() {
        let spec = LossSequence::new(LossKind::AlternatingLinear { c0: None }, 4, 2, 1.5, 0);
        let seq = spec.materialize(&simplex()).unwrap();
        let signs: Vec<f64> = seq
            .oracles
            .iter()
            .map(|o| match o {
                LossOracle::Linear { c } => c[0] / 1.5,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(signs, vec![-1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn random_linear_replays_and_respects_bound() {
        let spec = LossSequence::new(LossKind::RandomLinear, 50, 3, 2.0, 0);
        let dom = Domain::simplex(3, 0.01).unwrap();
        let a = spec.materialize(&dom).unwrap();
        assert_eq!(a, spec.materialize(&dom).unwrap());
        for o in &a.oracles {
            assert!((o.max_grad_norm(&dom).unwrap() - 2.0).abs() < 1e-12);
        }
        let other = LossSequence { seed: 1, ..spec };
        assert_ne!(a.oracles, other.materialize(&dom).unwrap().oracles);
    }

    #[test]
    fn fixed_quadratic_is_constant_and_rescaled() {
        let spec = LossSequence::new(
            LossKind::FixedQuadratic {
                a: Some(vec![1.0, 1.0]),
                b: 0.6,
            },
            5,
            2,
            1.0,
            0,
        );
        let dom = simplex();
        let seq = spec.materialize(&dom).unwrap();
        assert!(seq.oracles.windows(2).all(|w| w[0] == w[1]));
        // unscaled bound is 2·√2·0.58 > 1
        let bound = seq.oracles[0].max_grad_norm(&dom).unwrap();
        assert!((bound - 1.0).abs() < 1e-12);
        let loose = LossSequence {
            grad_bound: 10.0,
            ..spec
        };
        let q = loose.materialize(&dom).unwrap();
        assert_eq!(
            q.oracles[0],
            LossOracle::Quadratic {
                a: vec![1.0, 1.0],
                b: 0.6
            }
        );
    }

    #[test]
    fn invalid_specs_are_config_errors() {
        let dom = simplex();
        let bad = [
            LossSequence::new(LossKind::RandomLinear, 0, 2, 1.0, 0),
            LossSequence::new(LossKind::RandomLinear, 5, 2, 0.0, 0),
            LossSequence::new(
                LossKind::FixedLinear {
                    c0: Some(vec![3.0, 0.0]),
                },
                5,
                2,
                1.0,
                0,
            ),
        ];
        for s in bad {
            assert!(matches!(s.materialize(&dom), Err(Error::Config(_))));
        }
    }

    #[test]
    fn zero_sequence() {
        let s = LossSequence::new(LossKind::zero(), 3, 2, 1.0, 0);
        assert!(s.materialize(&simplex()).unwrap().is_zero());
    }

    #[test]
    fn quadratic_form_matches_oracles() {
        let spec = LossSequence::new(LossKind::RandomLinear, 7, 2, 1.0, 3);
        let dom = simplex();
        let mut seq = spec.materialize(&dom).unwrap();
        seq.oracles.push(LossOracle::Quadratic {
            a: vec![0.4, -0.2],
            b: 0.1,
        });
        let f = QuadraticForm::from_losses(&seq).unwrap();
        let x = [0.3, 0.45];
        let direct: f64 = seq.oracles.iter().map(|o| o.value(&x).unwrap()).sum();
        assert!((f.value(&x) - direct).abs() < 1e-12);
        let mut g = [0.0; 2];
        for o in &seq.oracles {
            for (gi, v) in g.iter_mut().zip(o.grad(&x).unwrap()) {
                *gi += v;
            }
        }
        let fg = f.grad(&x);
        assert!((fg[0] - g[0]).abs() < 1e-12 && (fg[1] - g[1]).abs() < 1e-12);
    }
}
