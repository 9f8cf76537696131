use crate::domains::{bregman_project, lp_norm};
use crate::error::{Error, Result};
use crate::geometry::{GeometryPair, Regularizer};
use crate::learners::{
    apply_shift, eg_step, ogd_step, omd_step, shifted_feasible, OgdState, OmdState,
};
use crate::losses::{LossSequence, Losses};
use crate::rng::{in_ball, stream_rng, Stream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    Omd,
    /// Projected gradient descent on `u` with `x = q(u)`.
    Ogd,
    /// Closed-form exponentiated gradient (entropy pairs only).
    Eg,
    PerturbedOmd,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Omd => "omd",
            LearnerKind::Ogd => "ogd",
            LearnerKind::Eg => "eg",
            LearnerKind::PerturbedOmd => "perturbed-omd",
        }
    }
}

/// Starting point of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// The domain's center point.
    Center,
    /// The projection of the point where `∇R` vanishes.
    LinkZero,
    Point(Vec<f64>),
}

/// Perturbation magnitude `C(η)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagnitudeRule {
    Zero,
    /// `κ η`
    Linear,
    /// `κ η^{3/2}`
    ThreeHalves,
    /// `κ η²`
    Quadratic,
}

impl MagnitudeRule {
    pub fn name(self) -> &'static str {
        match self {
            MagnitudeRule::Zero => "zero",
            MagnitudeRule::Linear => "eta",
            MagnitudeRule::ThreeHalves => "eta^1.5",
            MagnitudeRule::Quadratic => "eta^2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbDirection {
    /// Uniform in the `C`-ball.
    Uniform,
    /// Length `C` along the current loss gradient, pushing the iterate uphill.
    Adversarial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    pub rule: MagnitudeRule,
    pub kappa: f64,
    pub seed: u64,
    pub direction: PerturbDirection,
}

impl PerturbationSpec {
    pub fn magnitude(&self, eta: f64) -> f64 {
        self.kappa
            * match self.rule {
                MagnitudeRule::Zero => return 0.0,
                MagnitudeRule::Linear => eta,
                MagnitudeRule::ThreeHalves => eta.powf(1.5),
                MagnitudeRule::Quadratic => eta * eta,
            }
    }
}

/// One round of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    /// Primal point played in round `t`.
    pub x: Vec<f64>,
    /// Reparameterized iterate for gradient-descent runs.
    pub u: Option<Vec<f64>>,
    pub loss: f64,
    pub grad_norm: f64,
    /// Norm of the perturbation applied when leaving round `t`.
    pub perturb_norm: f64,
    pub proj_iterations: usize,
    pub proj_residual: f64,
    pub nudged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub pair: String,
    pub kind: LearnerKind,
    pub eta: f64,
    pub losses: LossSequence,
    pub records: Vec<StepRecord>,
    /// Iterate after the last round.
    pub final_x: Vec<f64>,
    pub final_u: Option<Vec<f64>>,
}

impl RunTrace {
    pub fn cumulative_loss(&self) -> f64 {
        self.records.iter().map(|r| r.loss).sum()
    }

    /// All iterates `x_1, …, x_{T+1}`.
    pub fn path(&self) -> Vec<Vec<f64>> {
        let mut p: Vec<Vec<f64>> = self.records.iter().map(|r| r.x.clone()).collect();
        p.push(self.final_x.clone());
        p
    }
}

/// A run that stopped at round `step`; `partial` holds the rounds completed before it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("run failed at step {step}: {source}")]
pub struct RunFailure {
    pub step: usize,
    pub source: Error,
    pub partial: Box<RunTrace>,
}

impl From<RunFailure> for Error {
    fn from(f: RunFailure) -> Self {
        let at = |m: String| format!("step {}: {m}", f.step);
        match f.source {
            Error::InvalidInput(m) => Error::InvalidInput(at(m)),
            Error::Config(m) => Error::Config(at(m)),
            Error::Numerical(m) => Error::Numerical(at(m)),
            Error::CheckFailed(m) => Error::CheckFailed(at(m)),
        }
    }
}

fn initial_point(pair: &GeometryPair, init: &Init) -> Result<Vec<f64>> {
    match init {
        Init::Center => Ok(pair.primal.center()),
        Init::Point(x) => {
            if !pair.primal.membership(x, 1e-9)? {
                return Err(Error::config(format!(
                    "initial point {x:?} is outside {}",
                    pair.primal.describe()
                )));
            }
            Ok(x.clone())
        }
        Init::LinkZero => {
            if matches!(pair.regularizer, Regularizer::LogBarrier) {
                return Err(Error::config(
                    "the log-barrier link never vanishes; use the center start",
                ));
            }
            let y = pair.regularizer.link_invert(&vec![0.0; pair.dim()])?;
            Ok(bregman_project(&pair.regularizer, &pair.primal, &y)?.point)
        }
    }
}

enum Iterate {
    Primal(OmdState),
    Reparam(OgdState),
}

struct Runner<'a> {
    kind: LearnerKind,
    pair: &'a GeometryPair,
    perturbation: Option<(PerturbationSpec, StreamRng)>,
    eta: f64,
}

impl Runner<'_> {
    fn sample_shift(&mut self, x: &[f64], grad: &[f64]) -> Vec<f64> {
        let d = x.len();
        let Some((spec, rng)) = self.perturbation.as_mut() else {
            return vec![0.0; d];
        };
        let c = spec.magnitude(self.eta);
        if c == 0.0 {
            return vec![0.0; d];
        }
        match spec.direction {
            PerturbDirection::Adversarial => {
                let n = lp_norm(grad, 2.0);
                if n == 0.0 {
                    vec![0.0; d]
                } else {
                    grad.iter().map(|g| c * g / n).collect()
                }
            }
            PerturbDirection::Uniform => {
                let mut r = in_ball(rng, d, c);
                for _ in 0..20 {
                    let cand: Vec<f64> = x.iter().zip(&r).map(|(a, b)| a + b).collect();
                    if shifted_feasible(self.pair, &cand) {
                        break;
                    }
                    r = in_ball(rng, d, c);
                }
                r
            }
        }
    }
}

/// Play `losses` with one learner and record every round.
pub fn run_learner(
    kind: LearnerKind,
    pair: &GeometryPair,
    losses: &Losses,
    eta: f64,
    perturbation: Option<PerturbationSpec>,
    init: &Init,
) -> Result<RunTrace, RunFailure> {
    let mut trace = RunTrace {
        pair: pair.label(),
        kind,
        eta,
        losses: losses.spec.clone(),
        records: Vec::with_capacity(losses.horizon()),
        final_x: Vec::new(),
        final_u: None,
    };
    let fail = |step: usize, source: Error, trace: &RunTrace| RunFailure {
        step,
        source,
        partial: Box::new(trace.clone()),
    };
    let setup = (|| -> Result<Iterate> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::config(format!(
                "step size must be positive, got {eta}"
            )));
        }
        if losses.spec.dim != pair.dim() {
            return Err(Error::config(format!(
                "loss dimension {} does not match the pair dimension {}",
                losses.spec.dim,
                pair.dim()
            )));
        }
        if kind == LearnerKind::Eg && pair.regularizer != Regularizer::NegativeEntropy {
            return Err(Error::config(
                "the exponentiated gradient learner needs the entropy pair",
            ));
        }
        let x = initial_point(pair, init)?;
        Ok(match kind {
            LearnerKind::Ogd => Iterate::Reparam(OgdState::new(pair.reparam.inverse(&x)?, eta)),
            _ => Iterate::Primal(OmdState::new(x, eta)),
        })
    })();
    let mut it = setup.map_err(|e| fail(1, e, &trace))?;
    let perturbation = match kind {
        LearnerKind::PerturbedOmd => {
            perturbation.map(|p| (p, stream_rng(p.seed, Stream::Perturbation)))
        }
        _ => None,
    };
    let mut runner = Runner {
        kind,
        pair,
        perturbation,
        eta,
    };

    for t in 1..=losses.horizon() {
        let f = losses.at(t);
        let round = (|| -> Result<(StepRecord, Iterate)> {
            match &it {
                Iterate::Primal(st) => {
                    let loss = f.value(&st.x)?;
                    let g = f.grad(&st.x)?;
                    let mut rec = StepRecord {
                        t,
                        x: st.x.clone(),
                        u: None,
                        loss,
                        grad_norm: lp_norm(&g, 2.0),
                        perturb_norm: 0.0,
                        proj_iterations: 0,
                        proj_residual: 0.0,
                        nudged: false,
                    };
                    let next = if runner.kind == LearnerKind::Eg {
                        let x = eg_step(&st.x, &g, eta, &pair.primal)?;
                        OmdState { x, eta, t: t + 1 }
                    } else {
                        let mut step = omd_step(pair, st, &g)?;
                        rec.proj_iterations = step.projection.iterations;
                        rec.proj_residual = step.projection.residual;
                        rec.nudged = step.nudged;
                        if runner.perturbation.is_some() {
                            let r = runner.sample_shift(&step.state.x, &g);
                            rec.perturb_norm = apply_shift(pair, &mut step.state.x, r);
                        }
                        step.state
                    };
                    Ok((rec, Iterate::Primal(next)))
                }
                Iterate::Reparam(st) => {
                    let x = pair.reparam.forward(&st.u)?;
                    let loss = f.value(&x)?;
                    let g = f.grad(&x)?;
                    let g_tilde = pair.reparam.chain_gradient(&st.u, &g)?;
                    let step = ogd_step(pair, st, &g_tilde)?;
                    let rec = StepRecord {
                        t,
                        x,
                        u: Some(st.u.clone()),
                        loss,
                        grad_norm: lp_norm(&g, 2.0),
                        perturb_norm: 0.0,
                        proj_iterations: step.projection.iterations,
                        proj_residual: step.projection.residual,
                        nudged: false,
                    };
                    Ok((rec, Iterate::Reparam(step.state)))
                }
            }
        })();
        let (rec, next) = round.map_err(|e| fail(t, e, &trace))?;
        trace.records.push(rec);
        it = next;
    }
    match it {
        Iterate::Primal(st) => trace.final_x = st.x,
        Iterate::Reparam(st) => {
            trace.final_x = pair
                .reparam
                .forward(&st.u)
                .map_err(|e| fail(losses.horizon(), e, &trace))?;
            trace.final_u = Some(st.u);
        }
    }
    Ok(trace)
}
