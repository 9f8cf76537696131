use rayon::prelude::*;

use crate::domains::{euclid_dist, Domain};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{GeometryPair, INTERIOR_MARGIN};
use crate::harness::{
    compute_comparator, estimate_constants, regret_of_trace, step_size_theorem, SlopeFit,
};
use crate::learners::{
    coupled_step_distance, run_learner, Init, LearnerKind, MagnitudeRule, PerturbDirection,
    PerturbationSpec,
};
use crate::losses::{LossKind, LossOracle, LossSequence};
use crate::rng::{derive_seed, stream_rng, unit_direction, Stream};

/// Step size as a function of the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaRule {
    /// Theorem rule with `D`, `G`, `G_F` estimated from the pair and losses.
    Theorem,
    /// Theorem rule with the given `(D, G, G_F)`.
    TheoremWith {
        d: f64,
        g: f64,
        g_f: f64,
    },
    /// `c T^{−1/2}`.
    Sqrt(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub pair: GeometryPair,
    pub kind: LearnerKind,
    pub loss: LossKind,
    pub grad_bound: f64,
    pub horizons: Vec<usize>,
    pub reps: usize,
    pub eta: EtaRule,
    pub seed: u64,
    pub perturbation: Option<PerturbationSpec>,
    pub init: Init,
    /// Smoothing `ε_min = T^{−e}` for simplex pairs instead of the fixed floor.
    pub eps_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub horizon: usize,
    pub eta: f64,
    pub seed: u64,
    pub regret: f64,
    pub comparator: f64,
    pub certificate: f64,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Mean regret per horizon.
    pub means: Vec<(usize, f64)>,
    /// Fit of log mean regret against log T; `None` when some mean is not positive.
    pub fit: Option<SlopeFit>,
}

fn pair_for_horizon(cfg: &SweepConfig, t: usize) -> Result<GeometryPair> {
    match (cfg.eps_exponent, &cfg.pair.primal) {
        (Some(e), Domain::Simplex { dim, .. }) => GeometryPair::new(
            cfg.pair.regularizer,
            cfg.pair.reparam,
            Domain::simplex(*dim, (t as f64).powf(-e))?,
        ),
        (Some(_), _) => Err(Error::config(
            "the smoothing schedule applies to simplex pairs only",
        )),
        (None, _) => Ok(cfg.pair.clone()),
    }
}

fn eta_for(cfg: &SweepConfig, pair: &GeometryPair, t: usize) -> Result<f64> {
    let tf = t as f64;
    match cfg.eta {
        EtaRule::Fixed(e) => Ok(e),
        EtaRule::Sqrt(c) => Ok(c / tf.sqrt()),
        EtaRule::TheoremWith { d, g, g_f } => step_size_theorem(tf, d, g, g_f),
        EtaRule::Theorem => {
            let probe = LossSequence::new(
                cfg.loss.clone(),
                t.min(1000),
                pair.dim(),
                cfg.grad_bound,
                cfg.seed,
            )
            .materialize(&pair.primal)?;
            let c = estimate_constants(pair, &probe, 200, cfg.seed)?;
            step_size_theorem(tf, c.diameter, c.g_for_rule(), cfg.grad_bound)
        }
    }
}

fn validate_horizons(horizons: &[usize], reps: usize) -> Result<()> {
    if horizons.len() < 3 {
        return Err(Error::config("a sweep needs at least three horizons"));
    }
    if horizons.contains(&0) {
        return Err(Error::config("horizons must be positive"));
    }
    if reps == 0 {
        return Err(Error::config("a sweep needs at least one repetition"));
    }
    Ok(())
}

/// Run every `(T, rep)` cell, fit log mean regret against log T.
pub fn regret_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    validate_horizons(&cfg.horizons, cfg.reps)?;
    let setups = cfg
        .horizons
        .iter()
        .map(|&t| {
            let pair = pair_for_horizon(cfg, t)?;
            let eta = eta_for(cfg, &pair, t)?;
            Ok((t, pair, eta))
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, usize)> = (0..setups.len())
        .flat_map(|h| (0..cfg.reps).map(move |r| (h, r)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(h, rep)| {
            let (t, pair, eta) = &setups[h];
            let seed = derive_seed(derive_seed(cfg.seed, *t as u64), rep as u64);
            let losses = LossSequence::new(cfg.loss.clone(), *t, pair.dim(), cfg.grad_bound, seed)
                .materialize(&pair.primal)?;
            let perturbation = cfg.perturbation.map(|p| PerturbationSpec {
                seed: derive_seed(seed, 1),
                ..p
            });
            let trace = run_learner(cfg.kind, pair, &losses, *eta, perturbation, &cfg.init)?;
            let comparator = compute_comparator(&losses, pair)?;
            let report = regret_of_trace(&trace, &comparator)?;
            Ok(SweepRow {
                horizon: *t,
                eta: *eta,
                seed,
                regret: report.regret,
                comparator: comparator.value,
                certificate: comparator.certificate,
                certified: comparator.certified,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.certified)
        .map(|r| {
            format!(
                "T={} seed={} certificate={:e}",
                r.horizon, r.seed, r.certificate
            )
        })
        .collect();
    if !failed.is_empty() {
        return Err(Error::CheckFailed(format!(
            "comparator not certified for {}",
            failed.join("; ")
        )));
    }
    let means: Vec<(usize, f64)> = cfg
        .horizons
        .iter()
        .map(|&t| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.horizon == t)
                .map(|r| r.regret)
                .collect();
            (t, v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect();
    let xs: Vec<f64> = means.iter().map(|m| m.0 as f64).collect();
    let ys: Vec<f64> = means.iter().map(|m| m.1).collect();
    let fit = SlopeFit::try_fit(&xs, &ys)?;
    Ok(SweepResult { rows, means, fit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosenessResult {
    /// `(η, max coupled distance)`.
    pub rows: Vec<(f64, f64)>,
    pub fit: Option<SlopeFit>,
}

/// Max coupled one-step distance over random interior starts for each step size.
///
/// Starts are sampled in the interior of `K'`, gradients are uniform
/// directions of norm `grad_bound`; the same draws are reused for every `η`.
pub fn closeness_sweep(
    pair: &GeometryPair,
    etas: &[f64],
    trials: usize,
    grad_bound: f64,
    seed: u64,
) -> Result<ClosenessResult> {
    if let Some(e) = etas.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::invalid(format!(
            "step sizes must be positive, got {e}"
        )));
    }
    if etas.len() < 3 {
        return Err(Error::config(
            "closeness sweep needs at least three step sizes",
        ));
    }
    let (lo, hi) = etas
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &e| (l.min(e), h.max(e)));
    if (hi / lo).log10() < 1.5 {
        return Err(Error::config("step sizes must span at least 1.5 decades"));
    }
    if trials == 0 {
        return Err(Error::config("closeness sweep needs at least one trial"));
    }
    let mut rng = stream_rng(seed, Stream::Probe);
    let draws = (0..trials)
        .map(|_| {
            let u = pair
                .reparam_domain
                .sample_interior(&mut rng, INTERIOR_MARGIN)?;
            let x = pair.reparam.forward(&u)?;
            let g: Vec<f64> = unit_direction(&mut rng, pair.dim())
                .into_iter()
                .map(|v| v * grad_bound)
                .collect();
            Ok((x, g))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = etas
        .iter()
        .map(|&eta| {
            let mut worst: f64 = 0.0;
            for (x, g) in &draws {
                worst = worst.max(coupled_step_distance(pair, x, g, eta)?);
            }
            Ok((eta, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = if rows.iter().all(|r| r.1 <= 1e-12) {
        None
    } else {
        let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
        SlopeFit::try_fit(&xs, &ys)?
    };
    Ok(ClosenessResult { rows, fit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbSweepConfig {
    pub pair: GeometryPair,
    pub loss: LossKind,
    pub grad_bound: f64,
    pub horizons: Vec<usize>,
    pub rules: Vec<MagnitudeRule>,
    pub kappa: f64,
    pub reps: usize,
    pub seed: u64,
    pub direction: PerturbDirection,
    /// `η = eta_scale · T^{−1/2}`.
    pub eta_scale: f64,
}

/// Perturbed-mirror-descent regret bound `C T G/η + D/η + η G² T/2`, evaluated
/// with the smoothness constant `G` and with the loss bound `G_F` in its place.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub rule: MagnitudeRule,
    pub horizon: usize,
    pub eta: f64,
    pub magnitude: f64,
    pub bound_g: f64,
    pub bound_gf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbSweepResult {
    pub per_rule: Vec<(MagnitudeRule, SweepResult)>,
    pub bounds: Vec<BoundRow>,
}

pub fn perturbation_sweep(cfg: &PerturbSweepConfig) -> Result<PerturbSweepResult> {
    validate_horizons(&cfg.horizons, cfg.reps)?;
    if cfg.rules.is_empty() {
        return Err(Error::config(
            "perturbation sweep needs at least one magnitude rule",
        ));
    }
    let probe = LossSequence::new(
        cfg.loss.clone(),
        100,
        cfg.pair.dim(),
        cfg.grad_bound,
        cfg.seed,
    )
    .materialize(&cfg.pair.primal)?;
    let consts = estimate_constants(&cfg.pair, &probe, 200, cfg.seed)?;
    let (d, g, gf) = (consts.diameter, consts.g(), cfg.grad_bound);
    let mut per_rule = Vec::new();
    let mut bounds = Vec::new();
    for &rule in &cfg.rules {
        let spec = PerturbationSpec {
            rule,
            kappa: cfg.kappa,
            seed: cfg.seed,
            direction: cfg.direction,
        };
        let sweep = SweepConfig {
            pair: cfg.pair.clone(),
            kind: LearnerKind::PerturbedOmd,
            loss: cfg.loss.clone(),
            grad_bound: cfg.grad_bound,
            horizons: cfg.horizons.clone(),
            reps: cfg.reps,
            eta: EtaRule::Sqrt(cfg.eta_scale),
            seed: cfg.seed,
            perturbation: Some(spec),
            init: Init::Center,
            eps_exponent: None,
        };
        per_rule.push((rule, regret_sweep(&sweep)?));
        for &t in &cfg.horizons {
            let tf = t as f64;
            let eta = cfg.eta_scale / tf.sqrt();
            let c = spec.magnitude(eta);
            bounds.push(BoundRow {
                rule,
                horizon: t,
                eta,
                magnitude: c,
                bound_g: c * tf * g / eta + d / eta + eta * g * g * tf / 2.0,
                bound_gf: c * tf * gf / eta + d / eta + eta * gf * gf * tf / 2.0,
            });
        }
    }
    Ok(PerturbSweepResult { per_rule, bounds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub pair: GeometryPair,
    pub loss: LossOracle,
    pub start: Vec<f64>,
    pub tau_end: f64,
    pub steps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    /// `(h, max_t ‖x(t) − q(u(t))‖₂)`.
    pub rows: Vec<(f64, f64)>,
    /// `dev(h_{k+1}) / dev(h_k)`.
    pub ratios: Vec<f64>,
}

/// Euler discretizations of the mirror flow and the reparameterized gradient
/// flow from the same start, without projections.
pub fn flow_check(cfg: &FlowConfig) -> Result<FlowResult> {
    let pair = &cfg.pair;
    check_dim("flow start", cfg.start.len(), pair.dim())?;
    if cfg.steps.len() < 3
        || cfg.steps.windows(2).any(|w| !(w[1] < w[0]))
        || cfg.steps.iter().any(|&h| !(h > 0.0))
    {
        return Err(Error::config(
            "flow check needs at least three positive, decreasing step sizes",
        ));
    }
    if !(cfg.tau_end >= 0.0 && cfg.tau_end.is_finite()) {
        return Err(Error::config("flow horizon must be nonnegative"));
    }
    let reg = &pair.regularizer;
    let q = &pair.reparam;
    let outside = |what: &str, k: usize| {
        Error::config(format!(
            "{what} left the interior of the domain at step {k}; use a smaller horizon"
        ))
    };
    let mut rows = Vec::new();
    for &h in &cfg.steps {
        let n = (cfg.tau_end / h).round() as usize;
        if (n as f64 * h - cfg.tau_end).abs() > 1e-9 * cfg.tau_end.max(1.0) {
            return Err(Error::config(format!(
                "step {h} does not divide the horizon {}",
                cfg.tau_end
            )));
        }
        let mut x = cfg.start.clone();
        let mut u = q.inverse(&x)?;
        let mut dev: f64 = 0.0;
        for k in 0..n {
            let g = cfg.loss.grad(&x)?;
            let dual: Vec<f64> = reg
                .link_apply(&x)?
                .iter()
                .zip(&g)
                .map(|(l, gi)| l - h * gi)
                .collect();
            x = reg.link_invert(&dual)?;
            let xu = q.forward(&u)?;
            let gu = q.chain_gradient(&u, &cfg.loss.grad(&xu)?)?;
            u.iter_mut().zip(&gu).for_each(|(ui, gi)| *ui -= h * gi);
            if !pair.primal.membership(&x, 0.0)? {
                return Err(outside("mirror trajectory", k + 1));
            }
            if !pair.reparam_domain.membership(&u, 0.0)? {
                return Err(outside("reparameterized trajectory", k + 1));
            }
            dev = dev.max(euclid_dist(&x, &q.forward(&u)?));
        }
        rows.push((h, dev));
    }
    let ratios = rows
        .windows(2)
        .map(|w| if w[0].1 == 0.0 { 0.0 } else { w[1].1 / w[0].1 })
        .collect();
    Ok(FlowResult { rows, ratios })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureConfig {
    pub dim: usize,
    pub eps_min: f64,
    pub eta: f64,
    pub horizon: usize,
    pub grad_bound: f64,
    pub loss: LossKind,
    pub seed: u64,
    /// Learner tracked against exponentiated gradient.
    pub other: LearnerKind,
}

impl Default for FigureConfig {
    fn default() -> Self {
        FigureConfig {
            dim: 2,
            eps_min: 1e-3,
            eta: 0.05,
            horizon: 200,
            grad_bound: 1.0,
            loss: LossKind::FixedQuadratic { a: None, b: 0.6 },
            seed: 0,
            other: LearnerKind::Ogd,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureResult {
    pub eg: Vec<Vec<f64>>,
    pub other: Vec<Vec<f64>>,
    pub distances: Vec<f64>,
    pub max_distance: f64,
    pub diameter: f64,
}

/// Free-running exponentiated gradient and a second learner from the same start.
pub fn figure_eg(cfg: &FigureConfig) -> Result<FigureResult> {
    let pair = GeometryPair::eg(cfg.dim, cfg.eps_min)?;
    let losses = LossSequence::new(
        cfg.loss.clone(),
        cfg.horizon,
        cfg.dim,
        cfg.grad_bound,
        cfg.seed,
    )
    .materialize(&pair.primal)?;
    let eg = run_learner(
        LearnerKind::Eg,
        &pair,
        &losses,
        cfg.eta,
        None,
        &Init::Center,
    )?
    .path();
    let other = run_learner(cfg.other, &pair, &losses, cfg.eta, None, &Init::Center)?.path();
    let distances: Vec<f64> = eg
        .iter()
        .zip(&other)
        .map(|(a, b)| euclid_dist(a, b))
        .collect();
    let max_distance = distances.iter().copied().fold(0.0, f64::max);
    Ok(FigureResult {
        eg,
        other,
        distances,
        max_distance,
        diameter: pair.primal.diameter(),
    })
}
