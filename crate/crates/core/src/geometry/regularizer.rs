use crate::error::{check_finite, Error, Result};

/// Coordinate-separable mirror maps.
///
/// Every built-in regularizer is a sum of identical scalar terms, so Hessians
/// are diagonal and all evaluation happens coordinate by coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    /// `R(x) = Σ xᵢ ln xᵢ`, link `1 + ln x`.
    NegativeEntropy,
    /// `R(x) = −Σ ln xᵢ`, link `−1/x`.
    LogBarrier,
    /// Tempered entropy with temperature `tau ∈ [0, 1)`, link `log_τ(x) = (x^{1−τ} − 1)/(1 − τ)`.
    Tempered { tau: f64 },
    /// `R(x) = ½‖x‖²`, link `x`.
    Euclidean,
}

impl Regularizer {
    pub fn tempered(tau: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::config(format!(
                "tempered regularizer needs tau in [0, 1), got {tau}"
            )));
        }
        Ok(Regularizer::Tempered { tau })
    }

    pub fn name(&self) -> String {
        match self {
            Regularizer::NegativeEntropy => "negative-entropy".into(),
            Regularizer::LogBarrier => "log-barrier".into(),
            Regularizer::Tempered { tau } => format!("tempered({tau})"),
            Regularizer::Euclidean => "euclidean".into(),
        }
    }

    /// Whether the link is only defined for strictly positive arguments.
    pub fn needs_positive(&self) -> bool {
        !matches!(self, Regularizer::Euclidean)
    }

    /// True for regularizers whose derivatives blow up at the boundary `x = 0`.
    pub fn is_log_based(&self) -> bool {
        matches!(self, Regularizer::NegativeEntropy | Regularizer::LogBarrier)
    }

    fn admissible(&self, x: f64) -> bool {
        match self {
            Regularizer::Euclidean => x.is_finite(),
            Regularizer::Tempered { .. } => x.is_finite() && x >= 0.0,
            _ => x.is_finite() && x > 0.0,
        }
    }

    pub(crate) fn check_point(&self, what: &str, x: &[f64]) -> Result<()> {
        check_finite(what, x)?;
        if let Some(i) = x.iter().position(|&v| !self.admissible(v)) {
            return Err(Error::invalid(format!(
                "{what}: entry {i} = {} is outside the domain of the {} regularizer",
                x[i],
                self.name()
            )));
        }
        Ok(())
    }

    pub fn value_scalar(&self, x: f64) -> f64 {
        match *self {
            Regularizer::NegativeEntropy => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x.ln()
                }
            }
            Regularizer::LogBarrier => -x.ln(),
            Regularizer::Tempered { tau } => {
                x.powf(2.0 - tau) / ((2.0 - tau) * (1.0 - tau)) - x / (1.0 - tau)
            }
            Regularizer::Euclidean => 0.5 * x * x,
        }
    }

    /// Scalar link `R′(x)`.
    pub fn link_scalar(&self, x: f64) -> f64 {
        match *self {
            Regularizer::NegativeEntropy => 1.0 + x.ln(),
            Regularizer::LogBarrier => -1.0 / x,
            Regularizer::Tempered { tau } => log_tempered(x, tau),
            Regularizer::Euclidean => x,
        }
    }

    /// Scalar inverse link `(R′)⁻¹(g)`.
    pub fn inv_link_scalar(&self, g: f64) -> Result<f64> {
        let x = match *self {
            Regularizer::NegativeEntropy => (g - 1.0).exp(),
            Regularizer::LogBarrier => {
                if g >= 0.0 {
                    return Err(Error::numerical(format!(
                        "log-barrier link value {g} is not negative; the step left the positive orthant, use a smaller step size"
                    )));
                }
                -1.0 / g
            }
            Regularizer::Tempered { tau } => {
                let base = 1.0 + (1.0 - tau) * g;
                if base < 0.0 || (base == 0.0 && tau > 0.0) {
                    return Err(Error::numerical(format!(
                        "tempered link value {g} is outside the range of log_tau (tau = {tau}); use a smaller step size"
                    )));
                }
                base.powf(1.0 / (1.0 - tau))
            }
            Regularizer::Euclidean => g,
        };
        if !x.is_finite() {
            return Err(Error::numerical(format!(
                "inverse link of {g} overflowed for the {} regularizer",
                self.name()
            )));
        }
        Ok(x)
    }

    /// Diagonal Hessian entry `R″(x)`.
    pub fn hess_scalar(&self, x: f64) -> f64 {
        match *self {
            Regularizer::NegativeEntropy => 1.0 / x,
            Regularizer::LogBarrier => 1.0 / (x * x),
            Regularizer::Tempered { tau } => x.powf(-tau),
            Regularizer::Euclidean => 1.0,
        }
    }

    /// Third derivative `R‴(x)`, used for the smoothness constants.
    pub fn third_scalar(&self, x: f64) -> f64 {
        match *self {
            Regularizer::NegativeEntropy => -1.0 / (x * x),
            Regularizer::LogBarrier => -2.0 / (x * x * x),
            Regularizer::Tempered { tau } => -tau * x.powf(-tau - 1.0),
            Regularizer::Euclidean => 0.0,
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_point("regularizer argument", x)?;
        Ok(x.iter().map(|&v| self.value_scalar(v)).sum())
    }

    /// `∇R(x)`.
    pub fn link_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point("link argument", x)?;
        Ok(x.iter().map(|&v| self.link_scalar(v)).collect())
    }

    /// `(∇R)⁻¹(g)`.
    pub fn link_invert(&self, g: &[f64]) -> Result<Vec<f64>> {
        check_finite("dual point", g)?;
        g.iter().map(|&v| self.inv_link_scalar(v)).collect()
    }

    pub fn hessian_diag(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point("hessian argument", x)?;
        Ok(x.iter().map(|&v| self.hess_scalar(v)).collect())
    }

    /// Bregman divergence `D_R(x‖y) = R(x) − R(y) − ∇R(y)ᵀ(x − y)`.
    ///
    /// Evaluated coordinate-wise in a cancellation-friendly form for each
    /// regularizer; the result is clamped at zero to absorb rounding.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        crate::error::check_dim("bregman divergence", x.len(), y.len())?;
        self.check_point("bregman first argument", x)?;
        self.check_point("bregman second argument", y)?;
        Ok(self.bregman_unchecked(x, y))
    }

    pub(crate) fn bregman_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let total: f64 = x
            .iter()
            .zip(y)
            .map(|(&a, &b)| match *self {
                Regularizer::NegativeEntropy => {
                    let log_term = if a == 0.0 { 0.0 } else { a * (a / b).ln() };
                    log_term - a + b
                }
                Regularizer::LogBarrier => {
                    let r = a / b;
                    r - r.ln() - 1.0
                }
                Regularizer::Euclidean => 0.5 * (a - b) * (a - b),
                Regularizer::Tempered { .. } => {
                    self.value_scalar(a) - self.value_scalar(b) - self.link_scalar(b) * (a - b)
                }
            })
            .sum();
        total.max(0.0)
    }
}

/// Tempered logarithm `log_τ(x) = (x^{1−τ} − 1)/(1 − τ)`.
pub fn log_tempered(x: f64, tau: f64) -> f64 {
    (x.powf(1.0 - tau) - 1.0) / (1.0 - tau)
}
