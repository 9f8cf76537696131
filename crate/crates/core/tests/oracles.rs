mod common;

use rand::Rng;

use reparam_omd::domains::Domain;
use reparam_omd::harness::{closeness_sweep, figure_eg, FigureConfig};
use reparam_omd::learners::coupled_step_distance;
use reparam_omd::{bregman_project, euclid_project, Regularizer};

#[test]
fn mirror_step_matches_proximal_argmin() {
    for (k, pair) in common::builtin_pairs(3).iter().enumerate() {
        let gap = common::proximal_agreement(pair, 100, 100 + k as u64);
        assert!(gap <= 1e-7, "{}: {gap:e}", pair.label());
    }
}

#[test]
fn projections_match_planar_grid() {
    let gap = common::projection_grid_error(100, 17);
    assert!(gap <= 2e-3, "{gap:e}");
}

#[test]
fn projections_match_line_grid() {
    let cases: Vec<(Domain, Option<Regularizer>)> = vec![
        (Domain::simplex(1, 0.01).unwrap(), None),
        (
            Domain::simplex(1, 0.01).unwrap(),
            Some(Regularizer::NegativeEntropy),
        ),
        (
            Domain::uniform_box(1, 0.1, 1.0).unwrap(),
            Some(Regularizer::LogBarrier),
        ),
        (
            Domain::ball(1, 2.0, 1.0, 0.0).unwrap(),
            Some(Regularizer::Tempered { tau: 0.25 }),
        ),
    ];
    let mut r = common::rng(3);
    for (domain, reg) in &cases {
        let (lo, hi) = domain.bounding_box();
        for _ in 0..100 {
            let y = vec![match reg {
                None => r.random_range(-0.5..1.5),
                Some(_) => r.random_range(0.05..1.5),
            }];
            let got = match reg {
                None => euclid_project(domain, &y).unwrap().point,
                Some(g) => bregman_project(g, domain, &y).unwrap().point,
            };
            let n = ((hi[0] - lo[0]) / 1e-6).round() as usize;
            let mut best = (f64::INFINITY, 0.0);
            for i in 0..=n {
                let x = lo[0] + (hi[0] - lo[0]) * i as f64 / n as f64;
                let v = match reg {
                    None => 0.5 * (x - y[0]).powi(2),
                    Some(g) => g.bregman(&[x], &y).unwrap(),
                };
                if v < best.0 {
                    best = (v, x);
                }
            }
            assert!((got[0] - best.1).abs() <= 2e-3, "{domain:?} {reg:?} {y:?}");
        }
    }
}

#[test]
fn chain_gradients_match_finite_differences() {
    for (k, pair) in common::builtin_pairs(4).iter().enumerate() {
        let err = common::chain_gradient_error(pair, 200, k as u64);
        assert!(err <= 1e-5, "{}: {err:e}", pair.label());
    }
}

#[test]
fn exponentiated_gradient_is_entropy_mirror_descent() {
    let gap = common::eg_vs_entropy_omd(5, 300);
    assert!(gap <= 1e-10, "{gap:e}");
}

#[test]
fn closeness_exponent_for_every_pair() {
    for pair in common::builtin_pairs(3) {
        let r = closeness_sweep(&pair, &[1e-1, 3e-2, 1e-2, 3e-3, 1e-3], 50, 1.0, 9).unwrap();
        match r.fit {
            None => assert!(r.rows.iter().all(|row| row.1 <= 1e-12), "{}", pair.label()),
            Some(fit) => assert!(
                (1.4..=2.1).contains(&fit.slope),
                "{}: slope {}",
                pair.label(),
                fit.slope
            ),
        }
    }
}

#[test]
fn single_round_figure_is_the_coupled_distance() {
    let cfg = FigureConfig {
        horizon: 1,
        ..FigureConfig::default()
    };
    let r = figure_eg(&cfg).unwrap();
    let pair = reparam_omd::GeometryPair::eg(2, cfg.eps_min).unwrap();
    let losses =
        reparam_omd::losses::LossSequence::new(cfg.loss.clone(), 1, 2, cfg.grad_bound, cfg.seed)
            .materialize(&pair.primal)
            .unwrap();
    let g = losses.at(1).grad(&r.eg[0]).unwrap();
    let want = coupled_step_distance(&pair, &r.eg[0], &g, cfg.eta).unwrap();
    assert!(
        (r.distances[1] - want).abs() <= 1e-15,
        "{} vs {want}",
        r.distances[1]
    );
}
