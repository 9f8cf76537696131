//! Brute-force oracles shared by the oracle suite and the acceptance target.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use reparam_omd::domains::Domain;
use reparam_omd::geometry::INTERIOR_MARGIN;
use reparam_omd::learners::{
    omd_step, omd_step_proximal, run_learner, Init, LearnerKind, OmdState,
};
use reparam_omd::losses::{LossKind, LossOracle, LossSequence};
use reparam_omd::rng::unit_direction;
use reparam_omd::{bregman_project, euclid_project, GeometryPair, Regularizer};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn builtin_pairs(d: usize) -> Vec<GeometryPair> {
    vec![
        GeometryPair::eg(d, 1e-3).unwrap(),
        GeometryPair::log_barrier(d, 1e-2).unwrap(),
        GeometryPair::tempered(d, 0.5, 2.0).unwrap(),
        GeometryPair::euclidean(Domain::uniform_box(d, 0.0, 1.0).unwrap()).unwrap(),
    ]
}

/// Largest distance between the closed-form mirror step and the proximal argmin
/// over `n` random interior starts, gradients and step sizes.
pub fn proximal_agreement(pair: &GeometryPair, n: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let u = pair
            .reparam_domain
            .sample_interior(&mut r, INTERIOR_MARGIN)
            .unwrap();
        let x = pair.reparam.forward(&u).unwrap();
        let g: Vec<f64> = unit_direction(&mut r, pair.dim())
            .into_iter()
            .map(|v| v * r.random_range(0.1..2.0))
            .collect();
        let eta = 10f64.powf(r.random_range(-3.0..-0.5));
        let state = OmdState::new(x, eta);
        let a = omd_step(pair, &state, &g).unwrap().state.x;
        let b = omd_step_proximal(pair, &state, &g).unwrap();
        worst = worst.max(dist(&a, &b));
    }
    worst
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn divergence(reg: Option<Regularizer>, x: &[f64], y: &[f64]) -> f64 {
    match reg {
        None => 0.5 * dist(x, y).powi(2),
        Some(r) => r.bregman(x, y).unwrap_or(f64::INFINITY),
    }
}

/// Minimizer of `D(·‖y)` over feasible points of a two-dimensional grid.
///
/// Passes at spacing 1e-2, 1e-4 and 1e-6, each around the previous winner.
/// Euclidean balls are gridded in polar coordinates so that the curved
/// boundary lies on the grid.
pub fn grid_projection(domain: &Domain, reg: Option<Regularizer>, y: &[f64]) -> Vec<f64> {
    assert_eq!(domain.dim(), 2);
    let polar = matches!(domain, Domain::Ball { p, .. } if *p == 2.0);
    let (lo, hi) = domain.bounding_box();
    let (lo, hi) = if polar {
        (vec![0.0, 0.0], vec![hi[0], std::f64::consts::FRAC_PI_2])
    } else {
        (lo, hi)
    };
    let point = |a: f64, b: f64| {
        if polar {
            vec![a * b.cos(), a * b.sin()]
        } else {
            vec![a, b]
        }
    };
    let search = |c: [f64; 2], w: f64, h: f64| {
        let mut best = (f64::INFINITY, c);
        let (a0, a1) = ((c[0] - w).max(lo[0]), (c[0] + w).min(hi[0]));
        let (b0, b1) = ((c[1] - w).max(lo[1]), (c[1] + w).min(hi[1]));
        let na = ((a1 - a0) / h).ceil() as usize;
        let nb = ((b1 - b0) / h).ceil() as usize;
        for i in 0..=na {
            for j in 0..=nb {
                let a = (a0 + i as f64 * h).min(a1);
                let b = (b0 + j as f64 * h).min(b1);
                let p = point(a, b);
                if !domain.membership(&p, 1e-12).unwrap() {
                    continue;
                }
                let v = divergence(reg, &p, y);
                if v < best.0 {
                    best = (v, [a, b]);
                }
            }
        }
        best.1
    };
    let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let wide = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let c = search(mid, wide, 1e-2);
    let c = search(c, 2e-2, 1e-4);
    let c = search(c, 2e-4, 1e-6);
    point(c[0], c[1])
}

/// Largest distance between the solvers and the grid oracle over `n` random
/// targets per `(domain, divergence)` case in two dimensions.
pub fn projection_grid_error(n: usize, seed: u64) -> f64 {
    let cases: Vec<(Domain, Option<Regularizer>)> = vec![
        (Domain::simplex(2, 0.01).unwrap(), None),
        (
            Domain::simplex(2, 0.01).unwrap(),
            Some(Regularizer::NegativeEntropy),
        ),
        (Domain::uniform_box(2, 0.1, 1.0).unwrap(), None),
        (
            Domain::uniform_box(2, 0.1, 1.0).unwrap(),
            Some(Regularizer::LogBarrier),
        ),
        (Domain::positive_l2_ball(2, 1.0).unwrap(), None),
        (
            Domain::ball(2, 2.0, 1.0, 0.0).unwrap(),
            Some(Regularizer::Tempered { tau: 0.5 }),
        ),
    ];
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for (domain, reg) in &cases {
        for _ in 0..n {
            let y: Vec<f64> = match reg {
                None => (0..2).map(|_| r.random_range(-0.5..1.5)).collect(),
                Some(_) => (0..2).map(|_| r.random_range(0.05..1.5)).collect(),
            };
            let got = match reg {
                None => euclid_project(domain, &y).unwrap().point,
                Some(g) => bregman_project(g, domain, &y).unwrap().point,
            };
            let want = grid_projection(domain, *reg, &y);
            worst = worst.max(dist(&got, &want));
        }
    }
    worst
}

/// Largest relative error of the chain-rule gradient against central differences of `f ∘ q`.
pub fn chain_gradient_error(pair: &GeometryPair, n: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let d = pair.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let a: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        let inner = LossOracle::Quadratic {
            a,
            b: r.random_range(-0.5..0.5),
        };
        let u = pair
            .reparam_domain
            .sample_interior(&mut r, INTERIOR_MARGIN)
            .unwrap();
        let x = pair.reparam.forward(&u).unwrap();
        let g = pair
            .reparam
            .chain_gradient(&u, &inner.grad(&x).unwrap())
            .unwrap();
        let f = |v: &[f64]| inner.value(&pair.reparam.forward(v).unwrap()).unwrap();
        for i in 0..d {
            let h = 1e-6 * (1.0 + u[i].abs());
            let (mut up, mut down) = (u.clone(), u.clone());
            up[i] += h;
            down[i] -= h;
            let fd = (f(&up) - f(&down)) / (2.0 * h);
            let scale = g.iter().map(|v| v.abs()).fold(1e-3, f64::max);
            worst = worst.max((g[i] - fd).abs() / scale);
        }
    }
    worst
}

/// Largest iterate gap between closed-form exponentiated gradient and entropy OMD.
pub fn eg_vs_entropy_omd(seeds: u64, horizon: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..seeds {
        for d in [2, 5] {
            let pair = GeometryPair::eg(d, 1e-3).unwrap();
            let losses = LossSequence::new(LossKind::RandomLinear, horizon, d, 1.0, seed)
                .materialize(&pair.primal)
                .unwrap();
            let a = run_learner(LearnerKind::Eg, &pair, &losses, 0.1, None, &Init::Center).unwrap();
            let b =
                run_learner(LearnerKind::Omd, &pair, &losses, 0.1, None, &Init::Center).unwrap();
            for (p, q) in a.path().iter().zip(b.path()) {
                worst = worst.max(dist(p, &q));
            }
        }
    }
    worst
}
