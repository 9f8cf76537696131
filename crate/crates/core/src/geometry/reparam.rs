use crate::error::{check_dim, check_finite, Error, Result};

/// Coordinate-separable reparameterization maps `x = q(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reparameterization {
    /// `q(u) = u ⊙ u / 4`.
    QuarterSquare,
    /// `q(u) = exp(u)`.
    Exponential,
    /// Normalized power map `q(u) = (a·u)^k` with `k = 2/(2 − τ)` and `a = 1/k`.
    ///
    /// The normalization makes `J_q(u)² = x^τ` hold exactly, i.e. `J_q J_qᵀ`
    /// is the inverse Hessian of the tempered regularizer with the raw
    /// `log_τ` link. `τ = 0` is the identity and `τ = 1` is [`QuarterSquare`].
    ///
    /// [`QuarterSquare`]: Reparameterization::QuarterSquare
    Power {
        tau: f64,
    },
    Identity,
}

impl Reparameterization {
    pub fn power(tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::config(format!(
                "power reparameterization needs tau in [0, 1], got {tau}"
            )));
        }
        Ok(Reparameterization::Power { tau })
    }

    pub fn name(&self) -> String {
        match self {
            Reparameterization::QuarterSquare => "quarter-square".into(),
            Reparameterization::Exponential => "exponential".into(),
            Reparameterization::Power { tau } => format!("power({tau})"),
            Reparameterization::Identity => "identity".into(),
        }
    }

    /// `(a, k)` of the normalized power map.
    fn power_params(tau: f64) -> (f64, f64) {
        let k = 2.0 / (2.0 - tau);
        (1.0 / k, k)
    }

    /// Whether the map is only defined on the nonnegative half-line.
    pub fn needs_nonnegative(&self) -> bool {
        matches!(
            self,
            Reparameterization::QuarterSquare | Reparameterization::Power { .. }
        )
    }

    pub fn forward_scalar(&self, u: f64) -> f64 {
        match *self {
            Reparameterization::QuarterSquare => u * u / 4.0,
            Reparameterization::Exponential => u.exp(),
            Reparameterization::Power { tau } => {
                let (a, k) = Self::power_params(tau);
                (a * u).powf(k)
            }
            Reparameterization::Identity => u,
        }
    }

    pub fn inverse_scalar(&self, x: f64) -> Result<f64> {
        match *self {
            Reparameterization::QuarterSquare | Reparameterization::Power { .. } if x < 0.0 => {
                Err(Error::invalid(format!(
                    "{} has no inverse at negative value {x}",
                    self.name()
                )))
            }
            Reparameterization::Exponential if x <= 0.0 => Err(Error::invalid(format!(
                "exponential map has no inverse at nonpositive value {x}"
            ))),
            Reparameterization::QuarterSquare => Ok(2.0 * x.sqrt()),
            Reparameterization::Exponential => Ok(x.ln()),
            Reparameterization::Power { tau } => {
                let (a, k) = Self::power_params(tau);
                Ok(x.powf(1.0 / k) / a)
            }
            Reparameterization::Identity => Ok(x),
        }
    }

    /// Diagonal Jacobian entry `q′(u)`.
    pub fn jacobian_scalar(&self, u: f64) -> f64 {
        match *self {
            Reparameterization::QuarterSquare => u / 2.0,
            Reparameterization::Exponential => u.exp(),
            Reparameterization::Power { tau } => {
                let (a, k) = Self::power_params(tau);
                // k·a = 1
                (a * u).powf(k - 1.0)
            }
            Reparameterization::Identity => 1.0,
        }
    }

    /// `q″(u)`.
    pub fn second_scalar(&self, u: f64) -> f64 {
        match *self {
            Reparameterization::QuarterSquare => 0.5,
            Reparameterization::Exponential => u.exp(),
            Reparameterization::Power { tau } => {
                let (a, k) = Self::power_params(tau);
                if k == 1.0 {
                    0.0
                } else {
                    a * (k - 1.0) * (a * u).powf(k - 2.0)
                }
            }
            Reparameterization::Identity => 0.0,
        }
    }

    /// `(q⁻¹)′(x)`.
    pub fn inverse_d1(&self, x: f64) -> f64 {
        match *self {
            Reparameterization::QuarterSquare => 1.0 / x.sqrt(),
            Reparameterization::Exponential => 1.0 / x,
            Reparameterization::Power { tau } => {
                let (_, k) = Self::power_params(tau);
                x.powf(1.0 / k - 1.0)
            }
            Reparameterization::Identity => 1.0,
        }
    }

    /// `(q⁻¹)″(x)`.
    pub fn inverse_d2(&self, x: f64) -> f64 {
        match *self {
            Reparameterization::QuarterSquare => -0.5 / (x * x.sqrt()),
            Reparameterization::Exponential => -1.0 / (x * x),
            Reparameterization::Power { tau } => {
                let (_, k) = Self::power_params(tau);
                let e = 1.0 / k - 1.0;
                if e == 0.0 {
                    0.0
                } else {
                    e * x.powf(e - 1.0)
                }
            }
            Reparameterization::Identity => 0.0,
        }
    }

    pub fn forward(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_finite("reparameterization argument", u)?;
        if self.needs_nonnegative() {
            if let Some(i) = u.iter().position(|&v| v < 0.0) {
                return Err(Error::invalid(format!(
                    "{} is only used on the nonnegative orthant; entry {i} = {}",
                    self.name(),
                    u[i]
                )));
            }
        }
        Ok(u.iter().map(|&v| self.forward_scalar(v)).collect())
    }

    pub fn inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_finite("reparameterization inverse argument", x)?;
        x.iter().map(|&v| self.inverse_scalar(v)).collect()
    }

    pub fn jacobian_diag(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&v| self.jacobian_scalar(v)).collect()
    }

    /// Gradient of `u ↦ f(q(u))` given `∇f` at `q(u)`: `J_q(u)ᵀ ∇f`.
    pub fn chain_gradient(&self, u: &[f64], grad_at_x: &[f64]) -> Result<Vec<f64>> {
        check_dim("chain gradient", grad_at_x.len(), u.len())?;
        check_finite("chain gradient input", grad_at_x)?;
        Ok(u.iter()
            .zip(grad_at_x)
            .map(|(&ui, &gi)| self.jacobian_scalar(ui) * gi)
            .collect())
    }
}
