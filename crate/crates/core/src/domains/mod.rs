//! Constraint sets and their projections.

mod projection;

pub use projection::{bregman_project, euclid_project, ProjectionResult};

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{check_dim, Error, Result};
use crate::geometry::Reparameterization;

/// Maximum rejection-sampling attempts before a domain is declared degenerate.
const MAX_REJECTIONS: usize = 1_000_000;

/// A convex constraint set in the nonnegative orthant.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Smoothed filled-in simplex `{x : xᵢ ≥ eps_min, Σ xᵢ ≤ 1}`.
    Simplex { dim: usize, eps_min: f64 },
    /// Axis-aligned box `lo ≤ x ≤ hi`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `{x : xᵢ ≥ floor, ‖x‖_p ≤ radius}` with `floor ≥ 0`.
    Ball {
        dim: usize,
        p: f64,
        radius: f64,
        floor: f64,
    },
}

impl Domain {
    pub fn simplex(dim: usize, eps_min: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("simplex dimension must be at least 1"));
        }
        if !(eps_min >= 0.0) || dim as f64 * eps_min >= 1.0 {
            return Err(Error::config(format!(
                "smoothed simplex needs 0 <= d * eps_min < 1 (d = {dim}, eps_min = {eps_min})"
            )));
        }
        Ok(Domain::Simplex { dim, eps_min })
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::config(
                "box bounds must be nonempty and of equal length",
            ));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite())
        {
            return Err(Error::config(
                "box needs finite lo < hi in every coordinate",
            ));
        }
        Ok(Domain::Box { lo, hi })
    }

    pub fn uniform_box(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(vec![lo; dim], vec![hi; dim])
    }

    pub fn ball(dim: usize, p: f64, radius: f64, floor: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("ball dimension must be at least 1"));
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::config(format!("ball needs finite p >= 1, got {p}")));
        }
        if !(radius > 0.0) || !(floor >= 0.0) {
            return Err(Error::config("ball needs radius > 0 and floor >= 0"));
        }
        if floor * (dim as f64).powf(1.0 / p) >= radius {
            return Err(Error::config(format!(
                "ball with floor {floor} and radius {radius} has empty interior"
            )));
        }
        Ok(Domain::Ball {
            dim,
            p,
            radius,
            floor,
        })
    }

    pub fn positive_l2_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::ball(dim, 2.0, radius, 0.0)
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Simplex { dim, .. } | Domain::Ball { dim, .. } => *dim,
            Domain::Box { lo, .. } => lo.len(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Domain::Simplex { dim, eps_min } => {
                format!("smoothed-filled-simplex(d={dim}, eps_min={eps_min})")
            }
            Domain::Box { lo, hi } => format!("box(lo={lo:?}, hi={hi:?})"),
            Domain::Ball {
                dim,
                p,
                radius,
                floor,
            } => format!("positive-lp-ball(d={dim}, p={p}, radius={radius}, floor={floor})"),
        }
    }

    /// Per-coordinate lower bounds.
    pub fn lower_bounds(&self) -> Vec<f64> {
        match self {
            Domain::Simplex { dim, eps_min } => vec![*eps_min; *dim],
            Domain::Box { lo, .. } => lo.clone(),
            Domain::Ball { dim, floor, .. } => vec![*floor; *dim],
        }
    }

    /// An axis-aligned box containing the domain.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Simplex { dim, eps_min } => {
                let top = 1.0 - (*dim as f64 - 1.0) * eps_min;
                (vec![*eps_min; *dim], vec![top; *dim])
            }
            Domain::Box { lo, hi } => (lo.clone(), hi.clone()),
            Domain::Ball {
                dim, radius, floor, ..
            } => (vec![*floor; *dim], vec![*radius; *dim]),
        }
    }

    pub fn membership(&self, x: &[f64], tol: f64) -> Result<bool> {
        check_dim("membership", x.len(), self.dim())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Ok(false);
        }
        Ok(match self {
            Domain::Simplex { eps_min, .. } => {
                x.iter().all(|&v| v >= eps_min - tol) && x.iter().sum::<f64>() <= 1.0 + tol
            }
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&v, (&l, &h))| v >= l - tol && v <= h + tol),
            Domain::Ball {
                p, radius, floor, ..
            } => x.iter().all(|&v| v >= floor - tol) && lp_norm(x, *p) <= radius + tol,
        })
    }

    /// Default initialization point.
    pub fn center(&self) -> Vec<f64> {
        match self {
            Domain::Simplex { dim, eps_min } => vec![(0.5 / *dim as f64).max(*eps_min); *dim],
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
            Domain::Ball {
                dim,
                p,
                radius,
                floor,
            } => vec![(0.5 * radius * (*dim as f64).powf(-1.0 / p)).max(*floor); *dim],
        }
    }

    /// Vertices for polytopes, `None` for balls.
    pub fn extreme_points(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            Domain::Simplex { dim, eps_min } => {
                let mut pts = vec![vec![*eps_min; *dim]];
                let slack = 1.0 - *dim as f64 * eps_min;
                for i in 0..*dim {
                    let mut v = vec![*eps_min; *dim];
                    v[i] += slack;
                    pts.push(v);
                }
                Some(pts)
            }
            Domain::Box { lo, hi } if lo.len() <= 12 => {
                let d = lo.len();
                Some(
                    (0..1usize << d)
                        .map(|mask| {
                            (0..d)
                                .map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
                                .collect()
                        })
                        .collect(),
                )
            }
            _ => None,
        }
    }

    /// Euclidean diameter (exact for simplices and boxes, maximized over
    /// axis, diagonal, and floor-corner candidates for balls).
    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Simplex { dim, eps_min } => {
                let slack = 1.0 - *dim as f64 * eps_min;
                if *dim == 1 {
                    slack
                } else {
                    std::f64::consts::SQRT_2 * slack
                }
            }
            Domain::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| (h - l) * (h - l))
                .sum::<f64>()
                .sqrt(),
            Domain::Ball {
                dim,
                p,
                radius,
                floor,
            } => {
                let d = *dim;
                let rest = (d as f64 - 1.0) * floor.powf(*p);
                let axis = (radius.powf(*p) - rest).max(0.0).powf(1.0 / p);
                let diag = radius * (d as f64).powf(-1.0 / p);
                let mut cands = vec![vec![*floor; d], vec![diag; d]];
                for i in 0..d {
                    let mut v = vec![*floor; d];
                    v[i] = axis;
                    cands.push(v);
                }
                let mut best: f64 = 0.0;
                for a in &cands {
                    for b in &cands {
                        best = best.max(euclid_dist(a, b));
                    }
                }
                best
            }
        }
    }

    /// Exact range of `aᵀx` over polytopes; a Hölder enclosure for balls.
    pub fn linear_range(&self, a: &[f64]) -> Result<(f64, f64)> {
        check_dim("linear range", a.len(), self.dim())?;
        if let Some(pts) = self.extreme_points() {
            let vals = pts.iter().map(|v| dot(a, v));
            let lo = vals.clone().fold(f64::INFINITY, f64::min);
            let hi = vals.fold(f64::NEG_INFINITY, f64::max);
            return Ok((lo, hi));
        }
        Ok(match self {
            Domain::Box { lo, hi } => {
                let mut mn = 0.0;
                let mut mx = 0.0;
                for i in 0..a.len() {
                    let (u, v) = (a[i] * lo[i], a[i] * hi[i]);
                    mn += u.min(v);
                    mx += u.max(v);
                }
                (mn, mx)
            }
            Domain::Ball { p, radius, .. } => {
                let q = if *p == 1.0 {
                    f64::INFINITY
                } else {
                    *p / (*p - 1.0)
                };
                let pos: Vec<f64> = a.iter().map(|v| v.max(0.0)).collect();
                let neg: Vec<f64> = a.iter().map(|v| (-v).max(0.0)).collect();
                (-radius * lp_norm(&neg, q), radius * lp_norm(&pos, q))
            }
            Domain::Simplex { .. } => unreachable!("simplex always has extreme points"),
        })
    }

    /// Draw a point from the interior, keeping `margin` away from every constraint.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R, margin: f64) -> Result<Vec<f64>> {
        match self {
            Domain::Simplex { dim, eps_min } => {
                let lo = eps_min + margin;
                let budget = 1.0 - margin - *dim as f64 * lo;
                if budget <= 0.0 {
                    return Err(Error::config(format!(
                        "simplex with d = {dim}, eps_min = {eps_min} has no interior at margin {margin}"
                    )));
                }
                // uniform on the (d+1)-part simplex via normalized exponential spacings
                let e: Vec<f64> = (0..=*dim).map(|_| rng.sample::<f64, _>(Exp1)).collect();
                let total: f64 = e.iter().sum();
                Ok(e[..*dim].iter().map(|w| lo + budget * w / total).collect())
            }
            Domain::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(&l, &h)| {
                    if h - l <= 2.0 * margin {
                        Err(Error::config(format!(
                            "box side [{l}, {h}] is too thin for margin {margin}"
                        )))
                    } else {
                        Ok(rng.random_range(l + margin..h - margin))
                    }
                })
                .collect(),
            Domain::Ball {
                dim,
                p,
                radius,
                floor,
            } => {
                let lo = floor + margin;
                let r = radius - margin;
                if lo >= r {
                    return Err(Error::config("ball has no interior at this margin"));
                }
                for _ in 0..MAX_REJECTIONS {
                    let x: Vec<f64> = (0..*dim).map(|_| rng.random_range(lo..r)).collect();
                    if lp_norm(&x, *p) <= r {
                        return Ok(x);
                    }
                }
                Err(Error::config(format!(
                    "rejection sampler found no interior point of {} at margin {margin}",
                    self.describe()
                )))
            }
        }
    }
}

/// Image `q⁻¹(primal)` of a primal domain under a built-in reparameterization.
pub fn map_domain(q: &Reparameterization, primal: &Domain) -> Result<Domain> {
    use Reparameterization as Q;
    let unsupported = || {
        Error::config(format!(
            "no closed-form image of {} under {}",
            primal.describe(),
            q.name()
        ))
    };
    match (q, primal) {
        (Q::Identity, _) => Ok(primal.clone()),
        (Q::Exponential, Domain::Box { lo, hi }) => {
            if lo.iter().any(|&l| l <= 0.0) {
                return Err(Error::config(
                    "exponential reparameterization needs a box with positive lower bounds",
                ));
            }
            Domain::boxed(
                lo.iter().map(|l| l.ln()).collect(),
                hi.iter().map(|h| h.ln()).collect(),
            )
        }
        (Q::Exponential, _) => Err(unsupported()),
        (Q::QuarterSquare | Q::Power { .. }, Domain::Box { lo, hi }) => {
            if lo.iter().any(|&l| l < 0.0) {
                return Err(Error::config(
                    "power maps need a box in the nonnegative orthant",
                ));
            }
            Domain::boxed(
                lo.iter()
                    .map(|&l| q.inverse_scalar(l))
                    .collect::<Result<_>>()?,
                hi.iter()
                    .map(|&h| q.inverse_scalar(h))
                    .collect::<Result<_>>()?,
            )
        }
        (Q::QuarterSquare | Q::Power { .. }, Domain::Simplex { dim, eps_min }) => {
            power_image(q, *dim, 1.0, 1.0, *eps_min)
        }
        (
            Q::QuarterSquare | Q::Power { .. },
            Domain::Ball {
                dim,
                p,
                radius,
                floor,
            },
        ) => power_image(q, *dim, *p, *radius, *floor),
    }
}

/// `{x ≥ floor, ‖x‖_p ≤ r}` under `u = (x^{1/k})/a`: `{u ≥ q⁻¹(floor), ‖u‖_{kp} ≤ r^{1/k}/a}`.
fn power_image(q: &Reparameterization, dim: usize, p: f64, r: f64, floor: f64) -> Result<Domain> {
    let tau = match q {
        Reparameterization::QuarterSquare => 1.0,
        Reparameterization::Power { tau } => *tau,
        _ => unreachable!(),
    };
    if p <= 1.0 - tau / 2.0 {
        return Err(Error::config(format!(
            "image of the l{p} ball under power({tau}) is not convex (needs p > 1 - tau/2)"
        )));
    }
    let k = 2.0 / (2.0 - tau);
    let new_p = k * p;
    // q(u) = (u/k)^k, so (x)^{1/k}·k is the inverse applied to the radius
    let new_r = r.powf(1.0 / k) * k;
    let new_floor = q.inverse_scalar(floor)?;
    Domain::ball(dim, new_p, new_r, new_floor)
}

pub(crate) fn lp_norm(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return x.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if p == 2.0 {
        return x.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn euclid_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn membership_examples() {
        let s = Domain::simplex(2, 0.01).unwrap();
        assert!(s.membership(&[0.5, 0.4], 0.0).unwrap());
        let b = Domain::positive_l2_ball(2, 2.0).unwrap();
        assert!(!b.membership(&[2.1, 0.0], 1e-9).unwrap());
        let bx = Domain::uniform_box(2, 0.01, 1.0).unwrap();
        assert!(bx.membership(&[0.5, 1.0], 0.0).unwrap());
        assert!(bx.membership(&[0.5], 0.0).is_err());
    }

    #[test]
    fn center_examples() {
        assert_eq!(Domain::simplex(2, 0.01).unwrap().center(), vec![0.25, 0.25]);
        assert_eq!(
            Domain::uniform_box(2, 0.0, 1.0).unwrap().center(),
            vec![0.5, 0.5]
        );
        let c = Domain::positive_l2_ball(4, 2.0).unwrap().center();
        for v in c {
            assert!((v - 0.5).abs() < 1e-15);
        }
        // eps_min dominates the uniform point
        assert_eq!(Domain::simplex(4, 0.2).unwrap().center(), vec![0.2; 4]);
    }

    #[test]
    fn invalid_domains_are_configuration_errors() {
        assert!(matches!(Domain::simplex(10, 0.1), Err(Error::Config(_))));
        assert!(Domain::boxed(vec![1.0], vec![0.5]).is_err());
        assert!(Domain::ball(2, 0.5, 1.0, 0.0).is_err());
        assert!(Domain::ball(2, 2.0, 1.0, 0.8).is_err());
    }

    #[test]
    fn map_domain_examples() {
        let k = map_domain(
            &Reparameterization::QuarterSquare,
            &Domain::simplex(3, 0.0).unwrap(),
        )
        .unwrap();
        assert_eq!(k, Domain::ball(3, 2.0, 2.0, 0.0).unwrap());

        let eps = (-2.0f64).exp();
        let k = map_domain(
            &Reparameterization::Exponential,
            &Domain::uniform_box(2, eps, 1.0).unwrap(),
        )
        .unwrap();
        match k {
            Domain::Box { lo, hi } => {
                assert!(lo.iter().all(|l| (l + 2.0).abs() < 1e-15));
                assert!(hi.iter().all(|h| *h == 0.0));
            }
            other => panic!("unexpected {other:?}"),
        }

        let k = map_domain(
            &Reparameterization::power(1.0).unwrap(),
            &Domain::ball(2, 1.0, 1.0, 0.0).unwrap(),
        )
        .unwrap();
        match k {
            Domain::Ball { p, radius, .. } => {
                assert_eq!(p, 2.0);
                assert!((radius - 2.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn smoothed_simplex_floor_maps_to_sqrt_floor() {
        let k = map_domain(
            &Reparameterization::QuarterSquare,
            &Domain::simplex(2, 0.01).unwrap(),
        )
        .unwrap();
        match k {
            Domain::Ball { floor, radius, .. } => {
                assert!((floor - 0.2).abs() < 1e-15);
                assert_eq!(radius, 2.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn map_domain_rejects_unsupported_and_nonconvex() {
        assert!(matches!(
            map_domain(
                &Reparameterization::Exponential,
                &Domain::simplex(2, 0.1).unwrap()
            ),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            map_domain(
                &Reparameterization::power(0.0).unwrap(),
                &Domain::ball(2, 1.0, 1.0, 0.0).unwrap()
            ),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn interior_samples_respect_margin() {
        let mut rng = stream_rng(3, Stream::Sampling);
        let domains = [
            Domain::simplex(5, 1e-3).unwrap(),
            Domain::uniform_box(3, 0.1, 1.0).unwrap(),
            Domain::ball(4, 2.0, 2.0, 0.06).unwrap(),
        ];
        for dom in &domains {
            for _ in 0..200 {
                let x = dom.sample_interior(&mut rng, 0.05).unwrap();
                assert!(dom.membership(&x, -0.05 + 1e-12).unwrap(), "{x:?}");
            }
        }
        assert!(Domain::simplex(19, 0.001)
            .unwrap()
            .sample_interior(&mut rng, 0.05)
            .is_err());
    }

    #[test]
    fn linear_range_on_simplex_uses_vertices() {
        let s = Domain::simplex(2, 0.01).unwrap();
        let (lo, hi) = s.linear_range(&[1.0, -1.0]).unwrap();
        assert!((lo + 0.98).abs() < 1e-15);
        assert!((hi - 0.98).abs() < 1e-15);
    }

    #[test]
    fn diameters() {
        let s = Domain::simplex(2, 0.0).unwrap();
        assert!((s.diameter() - 2f64.sqrt()).abs() < 1e-15);
        let b = Domain::uniform_box(3, 0.0, 1.0).unwrap();
        assert!((b.diameter() - 3f64.sqrt()).abs() < 1e-15);
        let l = Domain::positive_l2_ball(2, 1.0).unwrap();
        assert!((l.diameter() - 2f64.sqrt()).abs() < 1e-12);
    }
}
