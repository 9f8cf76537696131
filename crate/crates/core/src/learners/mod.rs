//! Single-step update rules: mirror descent, reparameterized gradient descent,
//! exponentiated gradient and the perturbed mirror step.

mod proximal;
mod run;

pub use proximal::omd_step_proximal;
pub use run::{
    run_learner, Init, LearnerKind, MagnitudeRule, PerturbDirection, PerturbationSpec, RunFailure,
    RunTrace, StepRecord,
};

use crate::domains::{
    bregman_project, euclid_dist, euclid_project, lp_norm, Domain, ProjectionResult,
};
use crate::error::{check_dim, check_finite, Error, Result};
use crate::geometry::{GeometryPair, Regularizer};

fn check_eta(eta: f64) -> Result<()> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!(
            "step size must be finite and nonnegative, got {eta}"
        )));
    }
    Ok(())
}

/// Iterate of mirror descent in the primal domain `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmdState {
    pub x: Vec<f64>,
    pub eta: f64,
    pub t: usize,
}

/// Iterate of gradient descent in the reparameterized domain `K'`.
#[derive(Debug, Clone, PartialEq)]
pub struct OgdState {
    pub u: Vec<f64>,
    pub eta: f64,
    pub t: usize,
}

impl OmdState {
    pub fn new(x: Vec<f64>, eta: f64) -> Self {
        OmdState { x, eta, t: 1 }
    }
}

impl OgdState {
    pub fn new(u: Vec<f64>, eta: f64) -> Self {
        OgdState { u, eta, t: 1 }
    }
}

/// Result of a mirror step.
#[derive(Debug, Clone, PartialEq)]
pub struct OmdStep {
    pub state: OmdState,
    /// Unprojected point `(∇R)⁻¹(∇R(x_t) − η g)`.
    pub y: Vec<f64>,
    pub projection: ProjectionResult,
    /// Whether `x_t` had boundary coordinates moved inward before the link evaluation.
    pub nudged: bool,
}

/// Result of a reparameterized gradient step.
#[derive(Debug, Clone, PartialEq)]
pub struct OgdStep {
    pub state: OgdState,
    /// Unprojected point `u_t − η g̃`.
    pub v: Vec<f64>,
    pub projection: ProjectionResult,
}

/// Move coordinates where a log-based link is undefined off the boundary.
fn nudge_inward(reg: &Regularizer, domain: &Domain, x: &mut [f64]) -> bool {
    if !reg.is_log_based() {
        return false;
    }
    let floor = domain
        .lower_bounds()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let step = if floor > 0.0 { floor / 10.0 } else { 1e-12 };
    let mut moved = false;
    for v in x.iter_mut().filter(|v| **v <= 0.0) {
        *v = step;
        moved = true;
    }
    moved
}

/// One mirror descent step: a gradient step on `∇R(x)` followed by a Bregman projection.
pub fn omd_step(pair: &GeometryPair, state: &OmdState, grad: &[f64]) -> Result<OmdStep> {
    check_eta(state.eta)?;
    check_dim("gradient", grad.len(), pair.dim())?;
    check_finite("gradient", grad)?;
    let reg = &pair.regularizer;
    let mut x = state.x.clone();
    let nudged = nudge_inward(reg, &pair.primal, &mut x);
    let link = reg.link_apply(&x)?;
    let dual: Vec<f64> = link
        .iter()
        .zip(grad)
        .map(|(&l, &g)| l - state.eta * g)
        .collect();
    let y = reg.link_invert(&dual)?;
    let projection = bregman_project(reg, &pair.primal, &y)?;
    Ok(OmdStep {
        state: OmdState {
            x: projection.point.clone(),
            eta: state.eta,
            t: state.t + 1,
        },
        y,
        projection,
        nudged,
    })
}

/// One projected gradient step in `K'` with the chained gradient `g̃ = J_q(u)ᵀ ∇f(q(u))`.
pub fn ogd_step(pair: &GeometryPair, state: &OgdState, grad_tilde: &[f64]) -> Result<OgdStep> {
    check_eta(state.eta)?;
    check_dim("reparameterized gradient", grad_tilde.len(), pair.dim())?;
    check_finite("reparameterized gradient", grad_tilde)?;
    let v: Vec<f64> = state
        .u
        .iter()
        .zip(grad_tilde)
        .map(|(&u, &g)| u - state.eta * g)
        .collect();
    let projection = euclid_project(&pair.reparam_domain, &v)?;
    Ok(OgdStep {
        state: OgdState {
            u: projection.point.clone(),
            eta: state.eta,
            t: state.t + 1,
        },
        v,
        projection,
    })
}

/// Exponentiated gradient: `Π^entropy(x ⊙ e^{−η g})`.
pub fn eg_step(x: &[f64], grad: &[f64], eta: f64, domain: &Domain) -> Result<Vec<f64>> {
    check_eta(eta)?;
    check_dim("gradient", grad.len(), x.len())?;
    check_finite("gradient", grad)?;
    Regularizer::NegativeEntropy.check_point("exponentiated gradient iterate", x)?;
    let y: Vec<f64> = x
        .iter()
        .zip(grad)
        .map(|(&xi, &g)| xi * (-eta * g).exp())
        .collect();
    Ok(bregman_project(&Regularizer::NegativeEntropy, domain, &y)?.point)
}

/// Mirror step followed by the shift `r`, with `‖r‖₂ ≤ bound` required.
///
/// If `x + r` leaves `K`, `r` is halved until the shifted point is feasible.
/// Returns the step and the realized perturbation norm.
pub fn perturbed_omd_step(
    pair: &GeometryPair,
    state: &OmdState,
    grad: &[f64],
    r: &[f64],
    bound: f64,
) -> Result<(OmdStep, f64)> {
    check_dim("perturbation", r.len(), pair.dim())?;
    check_finite("perturbation", r)?;
    let norm = lp_norm(r, 2.0);
    if norm > bound {
        return Err(Error::invalid(format!(
            "perturbation norm {norm} exceeds the bound {bound}"
        )));
    }
    let mut step = omd_step(pair, state, grad)?;
    let realized = apply_shift(pair, &mut step.state.x, r.to_vec());
    Ok((step, realized))
}

pub(crate) fn shifted_feasible(pair: &GeometryPair, x: &[f64]) -> bool {
    let strict = pair.regularizer.is_log_based();
    pair.primal.membership(x, 1e-12).unwrap_or(false) && (!strict || x.iter().all(|&v| v > 0.0))
}

/// Add `r` to `x`, halving `r` until the result is feasible. Returns `‖r‖₂` actually applied.
pub(crate) fn apply_shift(pair: &GeometryPair, x: &mut [f64], mut r: Vec<f64>) -> f64 {
    if r.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    for _ in 0..60 {
        let cand: Vec<f64> = x.iter().zip(&r).map(|(a, b)| a + b).collect();
        if shifted_feasible(pair, &cand) {
            x.copy_from_slice(&cand);
            return lp_norm(&r, 2.0);
        }
        r.iter_mut().for_each(|v| *v *= 0.5);
    }
    0.0
}

/// `‖x_{t+1} − q(u_{t+1})‖₂` after one coupled step from `x_t = q(u_t)`.
pub fn coupled_step_distance(
    pair: &GeometryPair,
    x_t: &[f64],
    grad: &[f64],
    eta: f64,
) -> Result<f64> {
    let x_next = omd_step(pair, &OmdState::new(x_t.to_vec(), eta), grad)?
        .state
        .x;
    let u = pair.reparam.inverse(x_t)?;
    let g_tilde = pair.reparam.chain_gradient(&u, grad)?;
    let u_next = ogd_step(pair, &OgdState::new(u, eta), &g_tilde)?.state.u;
    Ok(euclid_dist(&x_next, &pair.reparam.forward(&u_next)?))
}
