//! Euclidean and Bregman projections onto the built-in domains.
//!
//! Every domain is a box, or a set of lower bounds plus one separable budget
//! constraint `Σ φ(xᵢ) ≤ cap` (`φ(x) = x` for the simplex, `φ(x) = x^p` for
//! balls). For a separable regularizer the KKT conditions decouple: for a
//! fixed multiplier `λ` each coordinate solves `R′(xᵢ) + λ φ′(xᵢ) = R′(yᵢ)`
//! clamped at its lower bound, and the budget used is monotone decreasing
//! in `λ`. The multiplier is then found by a bracketed root search.

use crate::domains::{lp_norm, Domain};
use crate::error::{check_dim, check_finite, Error, Result};
use crate::geometry::Regularizer;

/// Admissible constraint residual after a projection.
pub const RESIDUAL_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 200;

/// Output of a projection together with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Vec<f64>,
    /// KKT multiplier of the budget constraint, 0 when inactive.
    pub multiplier: f64,
    pub iterations: usize,
    /// `cap − Σ φ(xᵢ)` when the budget is active, 0 otherwise.
    pub residual: f64,
}

impl ProjectionResult {
    fn trivial(point: Vec<f64>) -> Self {
        ProjectionResult {
            point,
            multiplier: 0.0,
            iterations: 0,
            residual: 0.0,
        }
    }
}

/// `argmin_{x ∈ domain} ‖x − v‖₂`.
pub fn euclid_project(domain: &Domain, v: &[f64]) -> Result<ProjectionResult> {
    check_dim("euclidean projection", v.len(), domain.dim())?;
    check_finite("euclidean projection input", v)?;
    match domain {
        Domain::Box { lo, hi } => Ok(ProjectionResult::trivial(clamp_box(v, lo, hi))),
        Domain::Ball {
            p, radius, floor, ..
        } if *p == 2.0 && *floor == 0.0 => {
            // ball ∩ orthant: clamp, then rescale radially
            let mut x: Vec<f64> = v.iter().map(|&c| c.max(0.0)).collect();
            let n = lp_norm(&x, 2.0);
            let mut mult = 0.0;
            if n > *radius {
                let s = radius / n;
                x.iter_mut().for_each(|c| *c *= s);
                mult = (n / radius - 1.0) / 2.0;
            }
            Ok(ProjectionResult {
                point: x,
                multiplier: mult,
                iterations: 0,
                residual: 0.0,
            })
        }
        _ => Separable::new(Regularizer::Euclidean, v.to_vec(), domain).solve(),
    }
}

/// Bregman projection `argmin_{x ∈ domain} D_R(x‖y)`.
pub fn bregman_project(reg: &Regularizer, domain: &Domain, y: &[f64]) -> Result<ProjectionResult> {
    if matches!(reg, Regularizer::Euclidean) {
        return euclid_project(domain, y);
    }
    check_dim("bregman projection", y.len(), domain.dim())?;
    reg.check_point("bregman projection input", y)?;
    if reg.needs_positive() && domain.lower_bounds().iter().any(|&l| l < 0.0) {
        return Err(Error::config(format!(
            "{} projection needs a domain inside the nonnegative orthant",
            reg.name()
        )));
    }
    match domain {
        Domain::Box { lo, hi } => Ok(ProjectionResult::trivial(clamp_box(y, lo, hi))),
        _ => {
            let targets = y.iter().map(|&v| reg.link_scalar(v)).collect();
            Separable::new(*reg, targets, domain).solve()
        }
    }
}

fn clamp_box(v: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    v.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&c, (&l, &h))| c.clamp(l, h))
        .collect()
}

#[derive(Debug, Clone, Copy)]
enum Budget {
    Linear,
    Power(f64),
}

impl Budget {
    fn phi(self, x: f64) -> f64 {
        match self {
            Budget::Linear => x,
            Budget::Power(2.0) => x * x,
            Budget::Power(p) => x.powf(p),
        }
    }
}

struct Separable {
    reg: Regularizer,
    /// Link values `R′(yᵢ)` of the point being projected.
    targets: Vec<f64>,
    lo: Vec<f64>,
    budget: Budget,
    cap: f64,
}

impl Separable {
    fn new(reg: Regularizer, targets: Vec<f64>, domain: &Domain) -> Self {
        let (budget, cap) = match domain {
            Domain::Simplex { .. } => (Budget::Linear, 1.0),
            Domain::Ball { p, radius, .. } if *p == 1.0 => (Budget::Linear, *radius),
            Domain::Ball { p, radius, .. } => (Budget::Power(*p), radius.powf(*p)),
            Domain::Box { .. } => unreachable!("boxes are projected by clamping"),
        };
        Separable {
            reg,
            targets,
            lo: domain.lower_bounds(),
            budget,
            cap,
        }
    }

    /// Inverse link where link values below the range map to the boundary 0.
    fn inv_link_or_zero(&self, g: f64) -> Result<f64> {
        match self.reg {
            Regularizer::Tempered { tau } if 1.0 + (1.0 - tau) * g <= 0.0 => Ok(0.0),
            _ => self.reg.inv_link_scalar(g),
        }
    }

    fn coordinate(&self, i: usize, lam: f64) -> Result<f64> {
        let t = self.targets[i];
        let lo = self.lo[i];
        let x = match self.budget {
            Budget::Linear => self.inv_link_or_zero(t - lam)?,
            Budget::Power(p) if matches!(self.reg, Regularizer::Euclidean) && p == 2.0 => {
                t / (1.0 + 2.0 * lam)
            }
            Budget::Power(p) => self.solve_power_coordinate(t, lo, lam, p)?,
        };
        Ok(x.max(lo))
    }

    /// Solve `R′(x) + λ p x^{p−1} = t` on `[lo, ∞)` by safeguarded Newton.
    fn solve_power_coordinate(&self, t: f64, lo: f64, lam: f64, p: f64) -> Result<f64> {
        let reg = self.reg;
        let h = |x: f64| reg.link_scalar(x) + lam * p * x.powf(p - 1.0) - t;
        if (lo > 0.0 || !reg.is_log_based()) && h(lo) >= 0.0 {
            return Ok(lo);
        }
        let mut a = lo;
        let mut b = self.inv_link_or_zero(t)?.max(lo);
        if h(b) <= 0.0 {
            return Ok(b);
        }
        let mut x = b;
        for _ in 0..MAX_ITERS {
            let fx = h(x);
            if fx > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let slope = reg.hess_scalar(x) + lam * p * (p - 1.0) * x.powf(p - 2.0);
            let mut next = x - fx / slope;
            if !(next > a && next < b) || !next.is_finite() {
                next = 0.5 * (a + b);
            }
            if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) || b - a <= 1e-16 * b.abs() {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }

    fn evaluate(&self, lam: f64) -> Result<(Vec<f64>, f64)> {
        let x = (0..self.targets.len())
            .map(|i| self.coordinate(i, lam))
            .collect::<Result<Vec<_>>>()?;
        let used = x.iter().map(|&v| self.budget.phi(v)).sum();
        Ok((x, used))
    }

    fn solve(&self) -> Result<ProjectionResult> {
        let (x0, used0) = self.evaluate(0.0)?;
        if used0 <= self.cap {
            return Ok(ProjectionResult::trivial(x0));
        }
        let floor_used: f64 = self.lo.iter().map(|&l| self.budget.phi(l)).sum();
        if floor_used > self.cap {
            return Err(Error::config("projection target domain is infeasible"));
        }

        // bracket: excess(a) > 0 (infeasible), excess(b) <= 0 (feasible)
        let mut iterations = 0;
        let (mut a, mut fa) = (0.0, used0 - self.cap);
        let mut b = 1.0;
        let (mut xb, ub) = self.evaluate(b)?;
        let mut fb = ub - self.cap;
        while fb > 0.0 {
            iterations += 1;
            if iterations > MAX_ITERS {
                return Err(Error::numerical(format!(
                    "could not bracket the projection multiplier (last lambda {b}, excess {fb})"
                )));
            }
            a = b;
            fa = fb;
            b *= 2.0;
            let (x, u) = self.evaluate(b)?;
            xb = x;
            fb = u - self.cap;
        }

        let tol = 1e-14 * self.cap.max(1.0);
        let mut side = 0i8;
        while -fb > tol && iterations < MAX_ITERS {
            iterations += 1;
            // Illinois variant of regula falsi
            let mut c = b - fb * (b - a) / (fb - fa);
            if !(c > a && c < b) {
                c = 0.5 * (a + b);
            }
            if c == a || c == b {
                break;
            }
            let (x, u) = self.evaluate(c)?;
            let fc = u - self.cap;
            if fc <= 0.0 {
                b = c;
                fb = fc;
                xb = x;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            } else {
                a = c;
                fa = fc;
                if side == 1 {
                    fb *= 0.5;
                }
                side = 1;
            }
        }
        let used: f64 = xb.iter().map(|&v| self.budget.phi(v)).sum();
        let residual = self.cap - used;
        if residual.abs() > RESIDUAL_TOL * self.cap.max(1.0) {
            return Err(Error::numerical(format!(
                "projection did not converge: residual {residual:e} after {iterations} iterations (lambda in [{a}, {b}])"
            )));
        }
        Ok(ProjectionResult {
            point: xb,
            multiplier: b,
            iterations,
            residual: residual.max(0.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_ball_projection_example() {
        let d = Domain::positive_l2_ball(2, 2.0).unwrap();
        let r = euclid_project(&d, &[3.0, -4.0]).unwrap();
        assert_eq!(r.point, vec![2.0, 0.0]);
    }

    #[test]
    fn box_projection_clamps() {
        let d = Domain::uniform_box(2, 0.01, 1.0).unwrap();
        assert_eq!(
            euclid_project(&d, &[0.5, 2.0]).unwrap().point,
            vec![0.5, 1.0]
        );
    }

    #[test]
    fn feasible_points_are_fixed() {
        let doms = [
            Domain::simplex(3, 0.01).unwrap(),
            Domain::ball(3, 2.0, 2.0, 0.1).unwrap(),
            Domain::ball(3, 1.5, 1.0, 0.0).unwrap(),
        ];
        let v = [0.2, 0.3, 0.25];
        for d in &doms {
            assert_eq!(euclid_project(d, &v).unwrap().point, v.to_vec());
            assert_eq!(
                bregman_project(&Regularizer::NegativeEntropy, d, &v)
                    .unwrap()
                    .point,
                v.to_vec()
            );
        }
    }

    #[test]
    fn entropy_projection_onto_simplex_rescales() {
        let d = Domain::simplex(2, 0.0).unwrap();
        let r = bregman_project(&Regularizer::NegativeEntropy, &d, &[0.8, 0.8]).unwrap();
        assert!((r.point[0] - 0.5).abs() < 1e-12 && (r.point[1] - 0.5).abs() < 1e-12);
        assert!(r.multiplier > 0.0);
        let r = bregman_project(&Regularizer::NegativeEntropy, &d, &[0.3, 0.3]).unwrap();
        assert_eq!(r.point, vec![0.3, 0.3]);
    }

    #[test]
    fn entropy_projection_respects_floor() {
        let d = Domain::simplex(3, 0.05).unwrap();
        let r = bregman_project(&Regularizer::NegativeEntropy, &d, &[2.0, 0.04, 1.0]).unwrap();
        assert_eq!(r.point[1], 0.05);
        assert!(d.membership(&r.point, 1e-12).unwrap());
        // free coordinates keep their ratio
        assert!((r.point[0] / r.point[2] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn euclidean_regularizer_matches_euclid_project() {
        let d = Domain::simplex(3, 0.01).unwrap();
        let v = [0.9, -0.2, 0.7];
        assert_eq!(
            bregman_project(&Regularizer::Euclidean, &d, &v).unwrap(),
            euclid_project(&d, &v).unwrap()
        );
    }

    #[test]
    fn floored_ball_projection_is_kkt() {
        let d = Domain::ball(3, 2.0, 2.0, 0.2).unwrap();
        let v = [3.0, 0.1, 1.0];
        let r = euclid_project(&d, &v).unwrap();
        assert!((lp_norm(&r.point, 2.0) - 2.0).abs() < 1e-12);
        assert_eq!(r.point[1], 0.2);
        // free coordinates are v / (1 + 2 lambda)
        assert!((r.point[0] / r.point[2] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn tempered_projection_onto_l2_ball() {
        let reg = Regularizer::tempered(0.5).unwrap();
        let d = Domain::positive_l2_ball(2, 1.0).unwrap();
        let r = bregman_project(&reg, &d, &[1.0, 0.6]).unwrap();
        assert!((lp_norm(&r.point, 2.0) - 1.0).abs() < 1e-10);
        // stationarity: link(y) - link(x) is proportional to x
        let g: Vec<f64> = (0..2)
            .map(|i| {
                (reg.link_scalar([1.0, 0.6][i]) - reg.link_scalar(r.point[i])) / (2.0 * r.point[i])
            })
            .collect();
        assert!((g[0] - g[1]).abs() < 1e-9);
        assert!((g[0] - r.multiplier).abs() < 1e-9);
    }

    #[test]
    fn log_barrier_projection_clamps_box() {
        let d = Domain::uniform_box(2, 0.1, 1.0).unwrap();
        let r = bregman_project(&Regularizer::LogBarrier, &d, &[1.3, 0.05]).unwrap();
        assert_eq!(r.point, vec![1.0, 0.1]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = Domain::simplex(2, 0.0).unwrap();
        assert!(matches!(
            bregman_project(&Regularizer::NegativeEntropy, &d, &[0.0, 0.5]),
            Err(Error::InvalidInput(_))
        ));
        assert!(euclid_project(&d, &[f64::NAN, 0.1]).is_err());
        assert!(euclid_project(&d, &[0.1]).is_err());
    }
}
