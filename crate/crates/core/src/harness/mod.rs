//! Experiment orchestration: comparators, regret and scaling sweeps, constants,
//! and report emission.

mod comparator;
pub mod report;
mod sweeps;

pub use comparator::{
    compute_comparator, regret_of_trace, Comparator, RegretReport, CERTIFICATE_TOL,
};
pub use sweeps::{
    closeness_sweep, figure_eg, flow_check, perturbation_sweep, regret_sweep, BoundRow,
    ClosenessResult, EtaRule, FigureConfig, FigureResult, FlowConfig, FlowResult,
    PerturbSweepConfig, PerturbSweepResult, SweepConfig, SweepResult, SweepRow,
};

use crate::error::{Error, Result};
use crate::geometry::{GeometryPair, INTERIOR_MARGIN};
use crate::losses::Losses;
use crate::rng::{stream_rng, Stream};

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
}

impl SlopeFit {
    /// Fit on the logs of strictly positive data; at least three distinct abscissae.
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 3 {
            return Err(Error::invalid(
                "slope fit needs at least three (x, y) pairs",
            ));
        }
        if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("slope fit needs positive finite data"));
        }
        let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
        let mut sorted: Vec<f64> = pts.iter().map(|p| p.0).collect();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("slope fit abscissae must be distinct"));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let rms = (pts
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        Ok(SlopeFit {
            points: pts,
            slope,
            intercept,
            rms,
        })
    }

    /// `None` when any ordinate is not strictly positive (e.g. all-zero regret).
    pub fn try_fit(xs: &[f64], ys: &[f64]) -> Result<Option<Self>> {
        if ys.iter().any(|&y| !(y > 0.0)) {
            return Ok(None);
        }
        Self::fit(xs, ys).map(Some)
    }
}

/// `η = T^{−2/3} D^{2/3} G^{−10/3} G_F^{−1}`.
pub fn step_size_theorem(t: f64, d: f64, g: f64, g_f: f64) -> Result<f64> {
    if !(t > 0.0 && d > 0.0 && g_f > 0.0) || !(g > 1.0) {
        return Err(Error::invalid(format!(
            "step-size rule needs positive T, D, G_F and G > 1 (got T={t}, D={d}, G={g}, G_F={g_f})"
        )));
    }
    Ok(t.powf(-2.0 / 3.0) * d.powf(2.0 / 3.0) * g.powf(-10.0 / 3.0) / g_f)
}

/// Empirical constants of a pair and a loss sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Constants {
    /// Largest observed loss gradient norm.
    pub grad_bound: f64,
    /// Largest observed Bregman divergence between sample points.
    pub diameter: f64,
    pub q_d1: f64,
    pub qinv_d1: f64,
    pub qinv_d2: f64,
    pub link: f64,
    pub link_d2: f64,
    pub samples: usize,
}

impl Constants {
    /// The smoothness constant taken as the largest component.
    pub fn g(&self) -> f64 {
        [
            self.q_d1,
            self.qinv_d1,
            self.qinv_d2,
            self.link,
            self.link_d2,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// `G` clamped just above 1 so the step-size rule is defined.
    pub fn g_for_rule(&self) -> f64 {
        self.g().max(1.0 + 1e-9)
    }
}

/// Maxima over interior samples (and domain vertices where they are admissible).
pub fn estimate_constants(
    pair: &GeometryPair,
    losses: &Losses,
    samples: usize,
    seed: u64,
) -> Result<Constants> {
    if samples < 100 {
        return Err(Error::config(
            "constant estimation needs at least 100 samples",
        ));
    }
    let mut rng = stream_rng(seed, Stream::Probe);
    let mut xs = Vec::with_capacity(samples);
    let mut us = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = pair
            .reparam_domain
            .sample_interior(&mut rng, INTERIOR_MARGIN)?;
        xs.push(pair.reparam.forward(&u)?);
        us.push(u);
    }
    let reg = &pair.regularizer;
    let q = &pair.reparam;
    let mut c = Constants {
        grad_bound: 0.0,
        diameter: 0.0,
        q_d1: 0.0,
        qinv_d1: 0.0,
        qinv_d2: 0.0,
        link: 0.0,
        link_d2: 0.0,
        samples,
    };
    for (x, u) in xs.iter().zip(&us) {
        for i in 0..x.len() {
            c.q_d1 = c.q_d1.max(q.jacobian_scalar(u[i]).abs());
            c.qinv_d1 = c.qinv_d1.max(q.inverse_d1(x[i]).abs());
            c.qinv_d2 = c.qinv_d2.max(q.inverse_d2(x[i]).abs());
            c.link = c.link.max(reg.link_scalar(x[i]).abs());
            c.link_d2 = c.link_d2.max(reg.third_scalar(x[i]).abs());
        }
    }
    let mut probes = xs;
    if let Some(v) = pair.primal.extreme_points() {
        probes.extend(
            v.into_iter()
                .filter(|p| reg.check_point("vertex", p).is_ok()),
        );
    }
    for a in &probes {
        for b in &probes {
            c.diameter = c.diameter.max(reg.bregman_unchecked(a, b));
        }
    }
    let mut distinct: Vec<&crate::losses::LossOracle> = Vec::new();
    for o in &losses.oracles {
        if distinct.last().is_none_or(|p| *p != o) {
            distinct.push(o);
        }
    }
    for o in distinct {
        for x in &probes {
            let g = o.grad(x)?;
            c.grad_bound = c.grad_bound.max(crate::domains::lp_norm(&g, 2.0));
        }
    }
    Ok(c)
}
