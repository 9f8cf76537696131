//! Regularizers, reparameterization maps and the pairs that tie them together.

mod regularizer;
mod reparam;

pub use regularizer::{log_tempered, Regularizer};
pub use reparam::Reparameterization;

use crate::domains::{map_domain, Domain};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Margin used when sampling the interior of `K'` for verification.
pub const INTERIOR_MARGIN: f64 = 0.05;

/// A regularizer on `K` together with a map `q: K' → K` whose Jacobian
/// reproduces the regularizer's inverse Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryPair {
    pub regularizer: Regularizer,
    pub reparam: Reparameterization,
    pub primal: Domain,
    pub reparam_domain: Domain,
}

impl GeometryPair {
    /// Build a pair, deriving `K' = q⁻¹(K)` from the primal domain.
    pub fn new(
        regularizer: Regularizer,
        reparam: Reparameterization,
        primal: Domain,
    ) -> Result<Self> {
        if regularizer.needs_positive() && primal.lower_bounds().iter().any(|&l| l < 0.0) {
            return Err(Error::config(format!(
                "{} needs a domain inside the nonnegative orthant",
                regularizer.name()
            )));
        }
        let reparam_domain = map_domain(&reparam, &primal)?;
        Ok(GeometryPair {
            regularizer,
            reparam,
            primal,
            reparam_domain,
        })
    }

    /// Negative entropy with the quarter-square map on the smoothed filled simplex.
    pub fn eg(dim: usize, eps_min: f64) -> Result<Self> {
        Self::new(
            Regularizer::NegativeEntropy,
            Reparameterization::QuarterSquare,
            Domain::simplex(dim, eps_min)?,
        )
    }

    /// Log barrier with the exponential map on `[ε, 1]^d`.
    pub fn log_barrier(dim: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::config(format!(
                "log-barrier box needs 0 < eps < 1, got {eps}"
            )));
        }
        Self::new(
            Regularizer::LogBarrier,
            Reparameterization::Exponential,
            Domain::uniform_box(dim, eps, 1.0)?,
        )
    }

    /// Tempered entropy with the normalized power map on the unit positive `ℓp` ball.
    pub fn tempered(dim: usize, tau: f64, p: f64) -> Result<Self> {
        Self::new(
            Regularizer::tempered(tau)?,
            Reparameterization::power(tau)?,
            Domain::ball(dim, p, 1.0, 0.0)?,
        )
    }

    /// Euclidean regularizer with the identity map on any domain.
    pub fn euclidean(domain: Domain) -> Result<Self> {
        Self::new(Regularizer::Euclidean, Reparameterization::Identity, domain)
    }

    pub fn dim(&self) -> usize {
        self.primal.dim()
    }

    pub fn label(&self) -> String {
        format!("{}+{}", self.regularizer.name(), self.reparam.name())
    }

    /// Smallest lower bound of `K`, clamped at zero.
    pub fn eps_min(&self) -> f64 {
        self.primal
            .lower_bounds()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    /// `q(u)` after checking `u ∈ K'`.
    pub fn to_primal(&self, u: &[f64]) -> Result<Vec<f64>> {
        if !self.reparam_domain.membership(u, 1e-9)? {
            return Err(Error::invalid(format!(
                "point {u:?} is outside {}",
                self.reparam_domain.describe()
            )));
        }
        self.reparam.forward(u)
    }

    /// `q⁻¹(x)` after checking `x ∈ K`.
    pub fn to_reparam(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.primal.membership(x, 1e-9)? {
            return Err(Error::invalid(format!(
                "point {x:?} is outside {}",
                self.primal.describe()
            )));
        }
        self.reparam.inverse(x)
    }

    /// `‖[∇²R(q(u))]⁻¹ − J_q(u) J_q(u)ᵀ‖_∞` at one point of `K'`.
    pub fn identity_deviation(&self, u: &[f64]) -> Result<f64> {
        let x = self.reparam.forward(u)?;
        let hess = self.regularizer.hessian_diag(&x)?;
        Ok(hess
            .iter()
            .zip(u)
            .map(|(&h, &ui)| {
                let j = self.reparam.jacobian_scalar(ui);
                (1.0 / h - j * j).abs()
            })
            .fold(0.0, f64::max))
    }
}

/// Outcome of [`verify_assumption1`].
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub max_deviation: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
    pub pass: bool,
}

/// Check `[∇²R(q(u))]⁻¹ = J_q(u) J_q(u)ᵀ` on points sampled from the interior of `K'`.
pub fn verify_assumption1(
    pair: &GeometryPair,
    num_samples: usize,
    tol: f64,
    seed: u64,
) -> Result<IdentityReport> {
    if num_samples == 0 {
        return Err(Error::config("verification needs at least one sample"));
    }
    let mut rng = stream_rng(seed, Stream::Sampling);
    let mut worst = (f64::NEG_INFINITY, Vec::new());
    for _ in 0..num_samples {
        let u = pair
            .reparam_domain
            .sample_interior(&mut rng, INTERIOR_MARGIN)?;
        let dev = pair.identity_deviation(&u)?;
        if dev > worst.0 {
            worst = (dev, u);
        }
    }
    Ok(IdentityReport {
        max_deviation: worst.0,
        worst_point: worst.1,
        samples: num_samples,
        pass: worst.0 <= tol,
    })
}
