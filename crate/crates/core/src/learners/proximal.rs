use crate::domains::euclid_project;
use crate::error::{check_dim, check_finite, Error, Result};
use crate::geometry::GeometryPair;
use crate::learners::OmdState;

const MAX_ITERS: usize = 2_000_000;

/// Mirror step computed as `argmin_{x ∈ K} gᵀ(x − x_t) + D_R(x‖x_t)/η`.
///
/// Solved by projected gradient descent with Euclidean projections and a
/// backtracked step that tracks the local curvature. It never touches the
/// inverse link or the Bregman projection, so it can serve as an
/// independent check of [`omd_step`](crate::learners::omd_step).
pub fn omd_step_proximal(pair: &GeometryPair, state: &OmdState, grad: &[f64]) -> Result<Vec<f64>> {
    let eta = state.eta;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!(
            "proximal step needs a positive step size, got {eta}"
        )));
    }
    check_dim("gradient", grad.len(), pair.dim())?;
    check_finite("gradient", grad)?;
    let reg = &pair.regularizer;
    let anchor = reg.link_apply(&state.x)?;
    let admissible = |x: &[f64]| !reg.needs_positive() || x.iter().all(|&v| v > 0.0);
    let objective_grad = |x: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(grad)
            .zip(&anchor)
            .map(|((&xi, &g), &a)| g + (reg.link_scalar(xi) - a) / eta)
            .collect()
    };

    let mut x = euclid_project(&pair.primal, &state.x)?.point;
    if !admissible(&x) {
        x = state.x.clone();
    }
    let curvature = reg
        .hessian_diag(&x)?
        .into_iter()
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut s = eta / curvature;
    let mut gx = objective_grad(&x);
    for _ in 0..MAX_ITERS {
        let (next, g_next) = loop {
            let trial: Vec<f64> = x.iter().zip(&gx).map(|(a, g)| a - s * g).collect();
            let cand = euclid_project(&pair.primal, &trial)?.point;
            if admissible(&cand) {
                let gc = objective_grad(&cand);
                let mut num = 0.0;
                let mut den = 0.0;
                for i in 0..x.len() {
                    let dx = cand[i] - x[i];
                    num += (gc[i] - gx[i]) * dx;
                    den += dx * dx;
                }
                if num * s <= den {
                    break (cand, gc);
                }
            }
            s *= 0.5;
            if s < 1e-300 {
                return Err(Error::numerical(format!(
                    "proximal solver step collapsed at x = {x:?}"
                )));
            }
        };
        let change = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = 1.0 + next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x = next;
        gx = g_next;
        if change <= 1e-15 * scale {
            return Ok(x);
        }
        s *= 1.5;
    }
    Err(Error::numerical(format!(
        "proximal solver did not converge in {MAX_ITERS} iterations (last iterate {x:?})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::Domain;
    use crate::learners::omd_step;

    #[test]
    fn matches_entropy_example() {
        let pair = GeometryPair::eg(2, 0.0).unwrap();
        let x = omd_step_proximal(&pair, &OmdState::new(vec![0.5, 0.5], 0.1), &[1.0, 0.0]).unwrap();
        assert!((x[0] - 0.452419).abs() < 1e-6 && (x[1] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn tiny_step_stays_put() {
        let pair = GeometryPair::eg(3, 0.01).unwrap();
        let x0 = vec![0.2, 0.3, 0.4];
        let x =
            omd_step_proximal(&pair, &OmdState::new(x0.clone(), 1e-8), &[1.0, -2.0, 0.5]).unwrap();
        for (a, b) in x.iter().zip(&x0) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn euclidean_box_is_clamped_step() {
        let pair = GeometryPair::euclidean(Domain::uniform_box(2, 0.0, 1.0).unwrap()).unwrap();
        let x =
            omd_step_proximal(&pair, &OmdState::new(vec![0.4, 0.9], 0.3), &[1.0, -1.0]).unwrap();
        assert!((x[0] - 0.1).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_mirror_step_on_active_constraint() {
        let pair = GeometryPair::eg(3, 0.02).unwrap();
        let st = OmdState::new(vec![0.3, 0.3, 0.35], 1.0);
        let g = [-1.0, -0.4, 2.0];
        let a = omd_step(&pair, &st, &g).unwrap();
        assert!(a.projection.multiplier > 0.0);
        let b = omd_step_proximal(&pair, &st, &g).unwrap();
        for (p, q) in a.state.x.iter().zip(&b) {
            assert!((p - q).abs() < 1e-7, "{:?} vs {b:?}", a.state.x);
        }
    }
}
