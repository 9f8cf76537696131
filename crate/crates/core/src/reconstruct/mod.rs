//! Rebuild the link of the mirror map implied by a diagonal reparameterization.
//!
//! For `x = q(u)` coordinate by coordinate, the link `R̃′(u) = R′(q(u))` must
//! solve `q′R̃″ − q″R̃′ − q′ = 0`. Variation of constants gives
//! `R̃′(u) = q′(u) (∫_C^u dv / q′(v) + c)`. The integral is tabulated by
//! adaptive quadrature and interpolated with a monotone cubic.

mod hermite;
mod quadrature;

pub use hermite::MonotoneCubic;
pub use quadrature::adaptive_simpson;

use crate::error::{Error, Result};
use crate::geometry::{Regularizer, Reparameterization};

/// Absolute tolerance of the cumulative integral.
pub const QUADRATURE_TOL: f64 = 1e-9;
const MIN_SLOPE: f64 = 1e-8;

/// A scalar map with two derivatives.
#[derive(Debug, Clone, Copy)]
pub enum ScalarFn {
    Builtin(Reparameterization),
    Custom {
        name: &'static str,
        q: fn(f64) -> f64,
        d1: fn(f64) -> f64,
        d2: fn(f64) -> f64,
    },
}

impl ScalarFn {
    pub fn name(&self) -> String {
        match self {
            ScalarFn::Builtin(q) => q.name(),
            ScalarFn::Custom { name, .. } => (*name).to_string(),
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        match self {
            ScalarFn::Builtin(q) => q.forward_scalar(u),
            ScalarFn::Custom { q, .. } => q(u),
        }
    }

    pub fn d1(&self, u: f64) -> f64 {
        match self {
            ScalarFn::Builtin(q) => q.jacobian_scalar(u),
            ScalarFn::Custom { d1, .. } => d1(u),
        }
    }

    pub fn d2(&self, u: f64) -> f64 {
        match self {
            ScalarFn::Builtin(q) => q.second_scalar(u),
            ScalarFn::Custom { d2, .. } => d2(u),
        }
    }
}

/// One coordinate map `qᵢ` on `[C, U]` with integration constant `c`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarMap {
    pub q: ScalarFn,
    pub lower: f64,
    pub upper: f64,
    pub c: f64,
}

impl ScalarMap {
    pub fn new(q: ScalarFn, lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper && lower.is_finite() && upper.is_finite()) {
            return Err(Error::config(format!(
                "invalid interval [{lower}, {upper}]"
            )));
        }
        Ok(ScalarMap {
            q,
            lower,
            upper,
            c: 0.0,
        })
    }

    /// Built-in map on the preimage of the primal interval `[x_lo, x_hi]`.
    pub fn over_primal(q: Reparameterization, x_lo: f64, x_hi: f64) -> Result<Self> {
        Self::new(
            ScalarFn::Builtin(q),
            q.inverse_scalar(x_lo)?,
            q.inverse_scalar(x_hi)?,
        )
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    /// `q⁻¹(x)` on `[C, U]`, assuming `q` is monotone there.
    pub fn inverse(&self, x: f64) -> Result<f64> {
        let (a, b) = (self.q.value(self.lower), self.q.value(self.upper));
        let (lo, hi) = (a.min(b), a.max(b));
        let slack = 1e-12 * (1.0 + hi.abs());
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(Error::invalid(format!(
                "{x} is outside the image [{lo}, {hi}] of {}",
                self.q.name()
            )));
        }
        if let ScalarFn::Builtin(q) = self.q {
            return q.inverse_scalar(x).map(|u| u.clamp(self.lower, self.upper));
        }
        let increasing = b >= a;
        let (mut l, mut r) = (self.lower, self.upper);
        for _ in 0..200 {
            let m = 0.5 * (l + r);
            if (self.q.value(m) < x) == increasing {
                l = m;
            } else {
                r = m;
            }
        }
        Ok(0.5 * (l + r))
    }

    /// `q([C, U])` as an ordered interval.
    pub fn image(&self) -> (f64, f64) {
        let (a, b) = (self.q.value(self.lower), self.q.value(self.upper));
        (a.min(b), a.max(b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffeoReport {
    pub min_abs_d1: f64,
    /// +1 or −1 when `q′` keeps its sign, 0 otherwise.
    pub sign: i8,
    pub pass: bool,
}

/// Sample `q′` on a uniform grid and check that it keeps one sign away from zero.
pub fn check_diffeomorphism(map: &ScalarMap, samples: usize) -> Result<DiffeoReport> {
    if samples < 2 {
        return Err(Error::config(
            "diffeomorphism check needs at least two samples",
        ));
    }
    let (mut pos, mut neg) = (false, false);
    let mut min_abs = f64::INFINITY;
    for i in 0..samples {
        let u = map.lower + (map.upper - map.lower) * i as f64 / (samples - 1) as f64;
        let d = map.q.d1(u);
        pos |= d > 0.0;
        neg |= d < 0.0;
        min_abs = min_abs.min(d.abs());
    }
    let sign = match (pos, neg) {
        (true, false) => 1,
        (false, true) => -1,
        _ => 0,
    };
    Ok(DiffeoReport {
        min_abs_d1: min_abs,
        sign,
        pass: sign != 0 && min_abs >= MIN_SLOPE,
    })
}

/// `R̃′` on a grid of `[C, U]`, carried by the tabulated integral `I(u) = ∫_C^u dv / q′(v)`.
///
/// `I` is strictly monotone for any admissible map, so its monotone cubic
/// interpolant is never flattened by the limiter, and `R̃′ = q′ (I + c)`,
/// `R̃″ = q″ (I + c) + q′ I′` follow from it for every choice of `c`.
#[derive(Debug, Clone)]
pub struct ReconstructedLink {
    integral: MonotoneCubic,
    q: ScalarFn,
    c: f64,
    pub h_max: f64,
}

impl ReconstructedLink {
    pub fn grid(&self) -> &[f64] {
        self.integral.nodes()
    }

    /// Tabulated `I(u)` at the grid nodes.
    pub fn integral(&self) -> &[f64] {
        self.integral.values()
    }

    /// Tabulated `R̃′(u)` at the grid nodes.
    pub fn values(&self) -> Vec<f64> {
        self.grid()
            .iter()
            .zip(self.integral())
            .map(|(&u, &i)| self.q.d1(u) * (i + self.c))
            .collect()
    }

    /// `(R̃′(u), R̃″(u))` from the interpolant.
    pub fn eval(&self, u: f64) -> Option<(f64, f64)> {
        let (i, di) = self.integral.eval(u)?;
        let (d1, d2) = (self.q.d1(u), self.q.d2(u));
        Some((d1 * (i + self.c), d2 * (i + self.c) + d1 * di))
    }

    /// Same grid with `extra(u)` added to every tabulated value of `R̃′`.
    pub fn corrupted(&self, extra: impl Fn(f64) -> f64) -> Result<Self> {
        let xs = self.grid().to_vec();
        let ys = xs
            .iter()
            .zip(self.integral())
            .map(|(&u, &i)| i + extra(u) / self.q.d1(u))
            .collect();
        Ok(ReconstructedLink {
            integral: MonotoneCubic::new(xs, ys)?,
            ..*self
        })
    }
}

fn build_grid(map: &ScalarMap, h_max: f64) -> Vec<f64> {
    let (a, b) = (map.lower, map.upper);
    let start = map.q.d1(a).abs();
    let peak = (0..=64)
        .map(|i| map.q.d1(a + (b - a) * i as f64 / 64.0).abs())
        .fold(0.0, f64::max);
    let mut h = if start < 0.1 * peak {
        h_max / 64.0
    } else {
        h_max
    };
    let mut grid = vec![a];
    let mut u = a;
    while u < b {
        let next = u + h;
        if next >= b - 1e-3 * h {
            break;
        }
        grid.push(next);
        u = next;
        h = (h * 1.2).min(h_max);
    }
    let last = *grid.last().unwrap_or(&a);
    // split the remainder evenly so every gap is at most h_max
    let parts = ((b - last) / h_max).ceil().max(1.0) as usize;
    for k in 1..=parts {
        grid.push(if k == parts {
            b
        } else {
            last + (b - last) * k as f64 / parts as f64
        });
    }
    grid
}

/// Tabulate `R̃′(u) = q′(u) (∫_C^u dv / q′(v) + c)` with grid spacing at most `h_max`.
pub fn reconstruct_link(map: &ScalarMap, h_max: f64) -> Result<ReconstructedLink> {
    if !(h_max > 0.0) {
        return Err(Error::config(format!(
            "grid spacing must be positive, got {h_max}"
        )));
    }
    let report = check_diffeomorphism(map, 1001)?;
    if !report.pass {
        return Err(Error::config(format!(
            "{} is not a diffeomorphism on [{}, {}] (min |q'| = {:e})",
            map.q.name(),
            map.lower,
            map.upper,
            report.min_abs_d1
        )));
    }
    let grid = build_grid(map, h_max);
    let span = map.upper - map.lower;
    let inv = |v: f64| 1.0 / map.q.d1(v);
    let mut integral = Vec::with_capacity(grid.len());
    integral.push(0.0);
    for w in grid.windows(2) {
        let tol = QUADRATURE_TOL * (w[1] - w[0]) / span;
        let last = integral[integral.len() - 1];
        integral.push(last + adaptive_simpson(&inv, w[0], w[1], tol)?);
    }
    if integral.iter().any(|v: &f64| !v.is_finite()) {
        return Err(Error::numerical("reconstructed link has non-finite values"));
    }
    Ok(ReconstructedLink {
        integral: MonotoneCubic::new(grid, integral)?,
        q: map.q,
        c: map.c,
        h_max,
    })
}

/// `|q′R̃″ − q″R̃′ − q′|` at `u` using the interpolated link.
pub fn ode_residual(map: &ScalarMap, link: &ReconstructedLink, u: f64) -> Result<f64> {
    let (r1, r2) = link
        .eval(u)
        .ok_or_else(|| Error::invalid(format!("{u} is outside the reconstruction grid")))?;
    let (d1, d2) = (map.q.d1(u), map.q.d2(u));
    Ok((d1 * r2 - d2 * r1 - d1).abs())
}

/// `1 / q′(q⁻¹(x))²`, the Hessian the reconstructed regularizer carries at `x`.
pub fn reconstructed_hessian(map: &ScalarMap, x: f64) -> Result<f64> {
    let u = map.inverse(x)?;
    let d = map.q.d1(u);
    Ok(1.0 / (d * d))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub max_ode_residual: f64,
    /// Largest relative Hessian mismatch against the known regularizer.
    pub max_hessian_mismatch: Option<f64>,
    /// Smallest reconstructed Hessian over the image interval.
    pub convexity_floor: f64,
    pub grid_points: usize,
}

/// Residual sweep at grid nodes and midpoints plus a Hessian comparison on 200 points.
pub fn certify_reconstruction(
    map: &ScalarMap,
    known: Option<Regularizer>,
    h_max: f64,
) -> Result<ReconstructionReport> {
    let link = reconstruct_link(map, h_max)?;
    let residual = link_residual(map, &link)?;
    let (lo, hi) = map.image();
    let n = 200;
    let mut mismatch: Option<f64> = None;
    let mut floor = f64::INFINITY;
    for i in 0..n {
        let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let h = reconstructed_hessian(map, x)?;
        floor = floor.min(h);
        if let Some(reg) = known {
            let want = reg.hess_scalar(x);
            let rel = (h - want).abs() / want.abs().max(f64::MIN_POSITIVE);
            mismatch = Some(mismatch.unwrap_or(0.0).max(rel));
        }
    }
    Ok(ReconstructionReport {
        max_ode_residual: residual,
        max_hessian_mismatch: mismatch,
        convexity_floor: floor,
        grid_points: link.grid().len(),
    })
}

/// Max ODE residual over interior grid nodes and the midpoints between all nodes.
pub fn link_residual(map: &ScalarMap, link: &ReconstructedLink) -> Result<f64> {
    let g = link.grid();
    let mut worst: f64 = 0.0;
    for (k, w) in g.windows(2).enumerate() {
        if k > 0 {
            worst = worst.max(ode_residual(map, link, w[0])?);
        }
        worst = worst.max(ode_residual(map, link, 0.5 * (w[0] + w[1]))?);
    }
    Ok(worst)
}
