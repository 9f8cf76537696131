use crate::domains::{euclid_dist, euclid_project, Domain};
use crate::error::{Error, Result};
use crate::geometry::GeometryPair;
use crate::learners::{omd_step, OmdState, RunTrace};
use crate::losses::{LossSequence, Losses, QuadraticForm};

/// Gradient-mapping norm below which the comparator counts as solved.
pub const CERTIFICATE_TOL: f64 = 1e-6;
const GRID_STEP: f64 = 1e-3;

/// Offline minimizer of the summed losses over `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparator {
    pub spec: LossSequence,
    pub point: Vec<f64>,
    /// `min_K Σ_t f_t`.
    pub value: f64,
    /// `‖x − Π_K(x − ∇F̄(x))‖₂` for the average loss `F̄`.
    pub certificate: f64,
    pub certified: bool,
    /// Upper bound on `value − true minimum` implied by the certificate.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub cumulative_loss: f64,
    pub comparator_value: f64,
    pub comparator_point: Vec<f64>,
    pub certificate: f64,
    pub certified: bool,
    pub slack: f64,
    pub regret: f64,
}

fn gradient_mapping(f: &QuadraticForm, domain: &Domain, x: &[f64]) -> Result<f64> {
    let g = f.grad(x);
    let step: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b).collect();
    Ok(euclid_dist(x, &euclid_project(domain, &step)?.point))
}

/// Projected gradient with a backtracked step on the descent-lemma test.
fn polish(f: &QuadraticForm, domain: &Domain, start: &[f64]) -> Result<Vec<f64>> {
    let mut x = euclid_project(domain, start)?.point;
    let lip = f.lipschitz_bound();
    let mut s = if lip > 0.0 { 1.0 / lip } else { 1.0 };
    let mut fx = f.value(&x);
    for _ in 0..200_000 {
        let g = f.grad(&x);
        let (next, fn_) = loop {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - s * b).collect();
            let cand = euclid_project(domain, &trial)?.point;
            let fc = f.value(&cand);
            let mut model = fx;
            let mut sq = 0.0;
            for i in 0..x.len() {
                let d = cand[i] - x[i];
                model += g[i] * d;
                sq += d * d;
            }
            model += sq / (2.0 * s);
            if fc <= model + 1e-15 * fx.abs().max(1.0) || s < 1e-18 {
                break (cand, fc);
            }
            s *= 0.5;
        };
        let moved = euclid_dist(&next, &x);
        x = next;
        fx = fn_;
        if moved <= 1e-15 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
            break;
        }
        s *= 2.0;
    }
    Ok(x)
}

/// Minimize over the last coordinate exactly for every grid point of the others.
fn grid_search(f: &QuadraticForm, domain: &Domain) -> Option<Vec<f64>> {
    let d = domain.dim();
    if d > 3 {
        return None;
    }
    let (lo, hi) = domain.bounding_box();
    let counts: Vec<usize> = (0..d - 1)
        .map(|i| ((hi[i] - lo[i]) / GRID_STEP).round() as usize + 1)
        .collect();
    let total: usize = counts.iter().product();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut x = vec![0.0; d];
    let last = d - 1;
    let h_ll = f.h[last * d + last];
    for idx in 0..total {
        let mut r = idx;
        for i in 0..d - 1 {
            x[i] = (lo[i] + (r % counts[i]) as f64 * GRID_STEP).min(hi[i]);
            r /= counts[i];
        }
        let Some((a, b)) = last_coordinate_range(domain, &x[..last]) else {
            continue;
        };
        // ½ h_ll t² + (g_l + Σ_j h_lj x_j) t + …
        let mut lin = f.g[last];
        for j in 0..last {
            lin += f.h[last * d + j] * x[j];
        }
        x[last] = if h_ll > 0.0 {
            (-lin / h_ll).clamp(a, b)
        } else if lin > 0.0 {
            a
        } else {
            b
        };
        let v = f.value(&x);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, x.clone()));
        }
    }
    best.map(|(_, p)| p)
}

fn last_coordinate_range(domain: &Domain, head: &[f64]) -> Option<(f64, f64)> {
    match domain {
        Domain::Simplex { eps_min, .. } => {
            let used: f64 = head.iter().sum();
            let hi = 1.0 - used;
            (head.iter().all(|&v| v >= *eps_min) && hi >= *eps_min).then_some((*eps_min, hi))
        }
        Domain::Box { lo, hi } => Some((lo[head.len()], hi[head.len()])),
        Domain::Ball {
            p, radius, floor, ..
        } => {
            let used: f64 = head.iter().map(|v| v.powf(*p)).sum();
            let rest = radius.powf(*p) - used;
            if rest < 0.0 || head.iter().any(|&v| v < *floor) {
                return None;
            }
            let hi = rest.powf(1.0 / p);
            (hi >= *floor).then_some((*floor, hi))
        }
    }
}

/// Minimize the summed losses over the primal domain of `pair`.
///
/// Long-horizon mirror descent on the average loss (`50 T` iterations with
/// steps `c/√s`, stopped early once the certificate is tiny), then a
/// projected-gradient polish. For `d ≤ 3` a grid search over all but the
/// last coordinate (which is minimized exactly) is polished too and the
/// lower value wins.
pub fn compute_comparator(losses: &Losses, pair: &GeometryPair) -> Result<Comparator> {
    let t = losses.horizon();
    if losses.spec.dim != pair.dim() {
        return Err(Error::config("loss and pair dimensions differ"));
    }
    let domain = &pair.primal;
    let total = QuadraticForm::from_losses(losses)?;
    let avg = total.scaled(1.0 / t as f64);

    let mut x = domain.center();
    let g0 = avg.grad(&x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if g0 > 0.0 || avg.lipschitz_bound() > 0.0 {
        let mut c = 1.0 / g0.max(avg.lipschitz_bound()).max(1e-12);
        let mut s = 1usize;
        while s <= 50 * t {
            let g = avg.grad(&x);
            match omd_step(pair, &OmdState::new(x.clone(), c / (s as f64).sqrt()), &g) {
                Ok(step) => x = step.state.x,
                Err(_) => {
                    c *= 0.5;
                    continue;
                }
            }
            if s.is_multiple_of(64) && gradient_mapping(&avg, domain, &x)? <= 1e-3 * CERTIFICATE_TOL
            {
                break;
            }
            s += 1;
        }
    }
    let mut point = polish(&avg, domain, &x)?;
    if let Some(g) = grid_search(&avg, domain) {
        let alt = polish(&avg, domain, &g)?;
        if avg.value(&alt) < avg.value(&point) {
            point = alt;
        }
    }
    let certificate = gradient_mapping(&avg, domain, &point)?;
    let value = total.value(&point);
    Ok(Comparator {
        spec: losses.spec.clone(),
        value,
        certificate,
        certified: certificate <= CERTIFICATE_TOL,
        slack: t as f64 * certificate * (domain.diameter() + 1.0),
        point,
    })
}

/// Regret of a recorded run against a comparator for the same loss sequence.
pub fn regret_of_trace(trace: &RunTrace, comparator: &Comparator) -> Result<RegretReport> {
    if trace.losses != comparator.spec {
        return Err(Error::invalid(
            "trace and comparator were computed for different loss sequences",
        ));
    }
    let cumulative = trace.cumulative_loss();
    Ok(RegretReport {
        cumulative_loss: cumulative,
        comparator_value: comparator.value,
        comparator_point: comparator.point.clone(),
        certificate: comparator.certificate,
        certified: comparator.certified,
        slack: comparator.slack,
        regret: cumulative - comparator.value,
    })
}
