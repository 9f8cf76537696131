//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use reparam_omd::harness::{
    closeness_sweep, figure_eg, flow_check, perturbation_sweep, regret_sweep, EtaRule,
    FigureConfig, FlowConfig, PerturbSweepConfig, SweepConfig,
};
use reparam_omd::learners::{Init, LearnerKind, MagnitudeRule, PerturbDirection};
use reparam_omd::losses::{LossKind, LossOracle};
use reparam_omd::reconstruct::{
    certify_reconstruction, link_residual, reconstruct_link, ScalarMap,
};
use reparam_omd::{verify_assumption1, GeometryPair, Regularizer, Reparameterization};

type Check = Result<(bool, String), String>;

fn criterion(results: &mut Vec<bool>, name: &str, budget: Duration, f: impl FnOnce() -> Check) {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let (pass, detail) = match outcome {
        Ok((ok, detail)) => (ok && elapsed <= budget, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "{} {name}: {detail} [{:.2}s / budget {:.0}s]",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    results.push(pass);
}

fn s(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn geometry_identity() -> Check {
    let mut pairs = vec![
        GeometryPair::eg(5, 1e-3).map_err(s)?,
        GeometryPair::log_barrier(5, 1e-3).map_err(s)?,
    ];
    for tau in [0.25, 0.5, 0.75] {
        pairs.push(GeometryPair::tempered(5, tau, 2.0).map_err(s)?);
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for pair in &pairs {
        let start = Instant::now();
        let r = verify_assumption1(pair, 1000, 1e-10, 11).map_err(s)?;
        let fast = start.elapsed() < Duration::from_secs(1);
        ok &= r.pass && fast;
        parts.push(format!("{} {:.1e}", pair.label(), r.max_deviation));
    }
    Ok((ok, format!("max deviation {}", parts.join(", "))))
}

fn closeness() -> Check {
    let pair = GeometryPair::eg(5, 1e-3).map_err(s)?;
    let r = closeness_sweep(&pair, &[1e-1, 3e-2, 1e-2, 3e-3, 1e-3], 50, 1.0, 3).map_err(s)?;
    let fit = r.fit.ok_or("no fit")?;
    Ok((
        (1.4..=2.1).contains(&fit.slope) && fit.rms <= 0.15,
        format!(
            "slope {:.3} (window [1.4, 2.1]), rms {:.3}",
            fit.slope, fit.rms
        ),
    ))
}

fn sweep(kind: LearnerKind, eta: EtaRule) -> SweepConfig {
    SweepConfig {
        pair: GeometryPair::eg(5, 1e-3).unwrap(),
        kind,
        loss: LossKind::RandomLinear,
        grad_bound: 1.0,
        horizons: vec![300, 1000, 3000, 10000],
        reps: 5,
        eta,
        seed: 2024,
        perturbation: None,
        init: Init::Center,
        eps_exponent: None,
    }
}

fn means(r: &reparam_omd::harness::SweepResult) -> String {
    r.means
        .iter()
        .map(|(t, m)| format!("{t}:{m:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn theorem_regret() -> Check {
    let r = regret_sweep(&sweep(LearnerKind::Ogd, EtaRule::Theorem)).map_err(s)?;
    let fit = r.fit.as_ref().ok_or("no fit")?;
    let certified = r.rows.iter().all(|row| row.certified);
    Ok((
        fit.slope <= 0.85 && certified,
        format!(
            "slope {:.3} (≤ 0.85), eta@T=300 {:.3e}, certified {certified}, mean regret {}",
            fit.slope,
            r.rows[0].eta,
            means(&r)
        ),
    ))
}

fn omd_baseline() -> Check {
    let r = regret_sweep(&sweep(LearnerKind::Omd, EtaRule::Sqrt(1.0))).map_err(s)?;
    let fit = r.fit.as_ref().ok_or("no fit")?;
    Ok((
        (0.35..=0.65).contains(&fit.slope),
        format!(
            "slope {:.3} (window [0.35, 0.65]), mean regret {}",
            fit.slope,
            means(&r)
        ),
    ))
}

fn perturbation() -> Check {
    let cfg = PerturbSweepConfig {
        pair: GeometryPair::eg(2, 1e-3).map_err(s)?,
        loss: LossKind::FixedLinear { c0: None },
        grad_bound: 1.0,
        horizons: vec![300, 1000, 3000, 10000],
        rules: vec![MagnitudeRule::Quadratic, MagnitudeRule::Linear],
        kappa: 0.5,
        reps: 5,
        seed: 2024,
        direction: PerturbDirection::Adversarial,
        eta_scale: 1.0,
    };
    let r = perturbation_sweep(&cfg).map_err(s)?;
    let slope = |rule| {
        r.per_rule
            .iter()
            .find(|(k, _)| *k == rule)
            .and_then(|(_, res)| res.fit.as_ref())
            .map(|f| f.slope)
            .ok_or_else(|| format!("no fit for {}", rule.name()))
    };
    let (quad, lin) = (
        slope(MagnitudeRule::Quadratic)?,
        slope(MagnitudeRule::Linear)?,
    );
    Ok((
        quad <= 0.75 && lin >= 0.85,
        format!("slope C∝η² {quad:.3} (≤ 0.75), C∝η {lin:.3} (≥ 0.85)"),
    ))
}

fn reconstruction() -> Check {
    let cases = [
        (
            Reparameterization::QuarterSquare,
            Regularizer::NegativeEntropy,
            0.01,
        ),
        (
            Reparameterization::Exponential,
            Regularizer::LogBarrier,
            0.1,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (q, reg, lo) in cases {
        let map = ScalarMap::over_primal(q, lo, 1.0).map_err(s)?;
        let r = certify_reconstruction(&map, Some(reg), 1e-3).map_err(s)?;
        let mismatch = r.max_hessian_mismatch.ok_or("no Hessian comparison")?;
        ok &= r.max_ode_residual <= 1e-6 && mismatch <= 1e-8;
        parts.push(format!(
            "{} residual {:.1e} mismatch {:.1e}",
            q.name(),
            r.max_ode_residual,
            mismatch
        ));
    }
    let map = ScalarMap::over_primal(Reparameterization::QuarterSquare, 0.01, 1.0).map_err(s)?;
    let bad = reconstruct_link(&map, 1e-3)
        .map_err(s)?
        .corrupted(|u| u * u)
        .map_err(s)?;
    let control = link_residual(&map, &bad).map_err(s)?;
    ok &= control > 0.1;
    parts.push(format!("corrupted control residual {control:.3}"));
    Ok((ok, parts.join(", ")))
}

fn flow() -> Check {
    let pair = GeometryPair::eg(3, 1e-3).map_err(s)?;
    let start = pair.primal.center();
    let r = flow_check(&FlowConfig {
        pair,
        loss: LossOracle::Quadratic {
            a: vec![1.0, 2.0, 3.0],
            b: 0.6,
        },
        start,
        tau_end: 1.0,
        steps: vec![1e-2, 5e-3, 2.5e-3],
    })
    .map_err(s)?;
    let monotone = r.rows.windows(2).all(|w| w[1].1 < w[0].1);
    let ok = monotone && r.ratios.iter().all(|q| (0.3..=0.7).contains(q));
    let ratios: Vec<String> = r.ratios.iter().map(|q| format!("{q:.3}")).collect();
    Ok((
        ok,
        format!("ratios {} (window [0.3, 0.7])", ratios.join(", ")),
    ))
}

fn figure() -> Check {
    let r = figure_eg(&FigureConfig::default()).map_err(s)?;
    let frac = r.max_distance / r.diameter;
    Ok((
        frac <= 0.05,
        format!(
            "max distance {:.3e} = {:.4}% of diameter",
            r.max_distance,
            100.0 * frac
        ),
    ))
}

fn oracles() -> Check {
    let mut prox: f64 = 0.0;
    let mut chain: f64 = 0.0;
    for (k, pair) in common::builtin_pairs(3).iter().enumerate() {
        prox = prox.max(common::proximal_agreement(pair, 100, k as u64));
        chain = chain.max(common::chain_gradient_error(pair, 50, k as u64));
    }
    let grid = common::projection_grid_error(8, 5);
    let eg = common::eg_vs_entropy_omd(3, 200);
    Ok((
        prox <= 1e-7 && grid <= 2e-3 && chain <= 1e-5 && eg <= 1e-10,
        format!("proximal {prox:.1e}, grid {grid:.1e}, chain {chain:.1e}, eg {eg:.1e}"),
    ))
}

fn run_cli(dir: &Path, tag: &str, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = dir.join(format!("{tag}.csv"));
    let status = Command::new(env!("CARGO_BIN_EXE_reparam-omd"))
        .args(args)
        .arg("--out")
        .arg(&out)
        .output()
        .map_err(s)?;
    if !status.status.success() {
        return Err(format!(
            "{} exited with {:?}: {}",
            args[0],
            status.status.code(),
            String::from_utf8_lossy(&status.stderr)
        ));
    }
    std::fs::read(&out).map_err(s)
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(s)?;
    let d = dir.path();
    let input = d.join("input.csv");
    std::fs::write(&input, "T,regret\n10,1.5\n100,4.0\n1000,12.5\n").map_err(s)?;
    let input = input.to_str().ok_or("bad temp path")?.to_string();
    let commands: Vec<Vec<&str>> = vec![
        vec!["check-geometry", "--pair", "eg", "--d", "3"],
        vec![
            "run",
            "--pair",
            "eg",
            "--d",
            "3",
            "--loss",
            "linear",
            "--T",
            "50",
            "--eta",
            "0.1",
            "--seed",
            "7",
            "--learner",
            "ogd",
        ],
        vec![
            "run",
            "--pair",
            "logbarrier",
            "--d",
            "2",
            "--loss",
            "quadratic",
            "--T",
            "30",
            "--eta",
            "auto",
            "--seed",
            "7",
            "--learner",
            "perturbed",
            "--perturb",
            "eta",
        ],
        vec!["closeness", "--pair", "eg", "--d", "3", "--seed", "7"],
        vec![
            "regret-sweep",
            "--pair",
            "eg",
            "--d",
            "2",
            "--loss",
            "linear",
            "--horizons",
            "20,40,80",
            "--reps",
            "2",
            "--learner",
            "ogd",
            "--seed",
            "7",
        ],
        vec![
            "perturb-sweep",
            "--pair",
            "eg",
            "--d",
            "2",
            "--horizons",
            "20,40,80",
            "--reps",
            "1",
            "--seed",
            "7",
        ],
        vec!["flow-check", "--pair", "eg", "--d", "2"],
        vec!["figure-eg", "--seed", "7"],
        vec!["reconstruct", "--pair", "eg"],
        vec![
            "constants",
            "--pair",
            "tempered",
            "--tau",
            "0.5",
            "--d",
            "3",
            "--loss",
            "linear",
            "--T",
            "50",
            "--seed",
            "7",
        ],
        vec!["plot", "--input", &input, "--x", "T", "--y", "regret"],
    ];
    let mut bad = Vec::new();
    for (k, args) in commands.iter().enumerate() {
        let a = run_cli(d, &format!("{k}a"), args)?;
        let b = run_cli(d, &format!("{k}b"), args)?;
        if a != b || a.is_empty() {
            bad.push(args[0]);
        }
    }
    Ok((
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} invocations byte-identical", commands.len())
        } else {
            format!("differing output from {}", bad.join(", "))
        },
    ))
}

fn main() {
    let mut results = Vec::new();
    let secs = Duration::from_secs;
    criterion(
        &mut results,
        "1 geometry identity",
        secs(5),
        geometry_identity,
    );
    criterion(
        &mut results,
        "2 one-step closeness exponent",
        secs(10),
        closeness,
    );
    criterion(
        &mut results,
        "3 reparameterized regret exponent",
        secs(300),
        theorem_regret,
    );
    criterion(
        &mut results,
        "4 mirror descent baseline exponent",
        secs(300),
        omd_baseline,
    );
    criterion(
        &mut results,
        "5 perturbation interpolation",
        secs(300),
        perturbation,
    );
    criterion(
        &mut results,
        "6 link reconstruction",
        secs(5),
        reconstruction,
    );
    criterion(&mut results, "7 flow equivalence", secs(10), flow);
    criterion(&mut results, "8 tracking figure", secs(2), figure);
    criterion(&mut results, "9 oracle equivalence", secs(120), oracles);
    criterion(&mut results, "10 determinism", secs(120), determinism);
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
