use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use reparam_omd::domains::Domain;
use reparam_omd::harness::report::{
    closeness_csv, figure_csv, flow_csv, fmt_f64, parse_config, perturb_csv, sweep_csv, trace_csv,
    Plot, Series, Table,
};
use reparam_omd::harness::{
    closeness_sweep, compute_comparator, estimate_constants, figure_eg, flow_check,
    perturbation_sweep, regret_of_trace, regret_sweep, step_size_theorem, EtaRule, FigureConfig,
    FlowConfig, PerturbSweepConfig, SweepConfig,
};
use reparam_omd::learners::{
    run_learner, Init, LearnerKind, MagnitudeRule, PerturbDirection, PerturbationSpec,
};
use reparam_omd::losses::{LossKind, LossOracle, LossSequence};
use reparam_omd::reconstruct::{
    certify_reconstruction, link_residual, ode_residual, reconstruct_link, ScalarMap,
};
use reparam_omd::{
    verify_assumption1, Error, GeometryPair, Regularizer, Reparameterization, Result,
};

/// Mirror descent, reparameterized gradient descent and their verification experiments.
#[derive(Parser)]
#[command(name = "reparam-omd", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Geometry pair: eg, logbarrier, tempered or euclid.
    #[arg(long)]
    pair: Option<String>,
    /// Temperature of the tempered pair.
    #[arg(long)]
    tau: Option<f64>,
    /// Norm exponent of the tempered pair's ball.
    #[arg(long)]
    p: Option<f64>,
    /// Dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Smoothing floor of the simplex, lower edge of the log-barrier box.
    #[arg(long)]
    eps_min: Option<f64>,
    /// Loss sequence: linear, quadratic, alternating, fixed-linear or zero.
    #[arg(long)]
    loss: Option<String>,
    /// Horizon.
    #[arg(long = "T", id = "T")]
    horizon: Option<usize>,
    /// Step size: auto, a number, or sqrt:<c> for c/sqrt(T).
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Repetitions per horizon.
    #[arg(long)]
    reps: Option<usize>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Loss gradient bound.
    #[arg(long)]
    grad_bound: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the Hessian/Jacobian identity on interior samples.
    CheckGeometry {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run one learner and write its trace.
    Run {
        #[command(flatten)]
        common: Common,
        /// omd, ogd, eg or perturbed.
        #[arg(long)]
        learner: Option<String>,
        /// Perturbation magnitude rule: zero, eta, eta1.5 or eta2.
        #[arg(long)]
        perturb: Option<String>,
        #[arg(long)]
        kappa: Option<f64>,
        /// uniform or adversarial.
        #[arg(long)]
        direction: Option<String>,
        /// center or link-zero.
        #[arg(long)]
        init: Option<String>,
    },
    /// Coupled one-step distance against the step size.
    Closeness {
        #[command(flatten)]
        common: Common,
        /// Comma-separated step sizes.
        #[arg(long)]
        etas: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        min_slope: Option<f64>,
        #[arg(long)]
        max_slope: Option<f64>,
        #[arg(long)]
        max_rms: Option<f64>,
    },
    /// Regret against horizon, with a log-log slope fit.
    RegretSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        learner: Option<String>,
        /// Comma-separated horizons.
        #[arg(long)]
        horizons: Option<String>,
        /// Smoothing schedule eps_min = T^(-e) on simplex pairs.
        #[arg(long)]
        eps_exponent: Option<f64>,
        #[arg(long)]
        min_slope: Option<f64>,
        #[arg(long)]
        max_slope: Option<f64>,
    },
    /// Perturbed mirror descent regret per magnitude rule, with the analytic bound.
    PerturbSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        horizons: Option<String>,
        /// Comma-separated rules: zero, eta, eta1.5, eta2.
        #[arg(long)]
        rules: Option<String>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        direction: Option<String>,
        /// Step size is eta-scale / sqrt(T).
        #[arg(long)]
        eta_scale: Option<f64>,
    },
    /// Euler discretizations of the mirror flow and the reparameterized flow.
    FlowCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tau_end: Option<f64>,
        /// Comma-separated decreasing step sizes.
        #[arg(long)]
        steps: Option<String>,
        #[arg(long)]
        min_ratio: Option<f64>,
        #[arg(long)]
        max_ratio: Option<f64>,
    },
    /// Exponentiated gradient against a free-running second learner.
    FigureEg {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        other: Option<String>,
        /// Largest accepted distance as a fraction of the diameter.
        #[arg(long)]
        max_fraction: Option<f64>,
    },
    /// Rebuild the link from the reparameterization and certify it.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        h_max: Option<f64>,
        /// Integration constant c.
        #[arg(long)]
        c: Option<f64>,
        /// Lower end of the primal interval.
        #[arg(long)]
        x_lo: Option<f64>,
        /// Add u^2 to the tabulated link.
        #[arg(long)]
        corrupt: bool,
    },
    /// Estimated constants and the theorem step size.
    Constants {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// SVG line plot of CSV columns.
    Plot {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        x: Option<String>,
        /// Comma-separated column names.
        #[arg(long)]
        y: Option<String>,
        #[arg(long)]
        log_x: bool,
        #[arg(long)]
        log_y: bool,
    },
}

/// Flag values layered over the config file.
struct Settings {
    map: BTreeMap<String, String>,
}

fn key(id: &str) -> String {
    id.replace('_', "-")
}

impl Settings {
    fn from_matches(m: &ArgMatches) -> Result<Self> {
        let mut map = BTreeMap::new();
        if let Some(path) = m.get_one::<PathBuf>("config") {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
            for (k, v) in parse_config(&text)? {
                map.insert(key(&k), v);
            }
        }
        for id in m.ids() {
            if m.value_source(id.as_str()) != Some(ValueSource::CommandLine) {
                continue;
            }
            if let Ok(Some(raw)) = m.try_get_raw(id.as_str()) {
                let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
                map.insert(key(id.as_str()), vals.join(","));
            }
        }
        Ok(Settings { map })
    }

    fn str(&self, k: &str) -> Option<&str> {
        self.map.get(k).map(String::as_str)
    }

    fn text(&self, k: &str, default: &str) -> String {
        self.str(k).unwrap_or(default).to_string()
    }

    fn get<T: FromStr>(&self, k: &str, default: T) -> Result<T> {
        match self.str(k) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(format!("invalid value {v:?} for {k}"))),
        }
    }

    fn opt<T: FromStr>(&self, k: &str) -> Result<Option<T>> {
        self.str(k)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::config(format!("invalid value {v:?} for {k}")))
            })
            .transpose()
    }

    fn list<T: FromStr + Clone>(&self, k: &str, default: &[T]) -> Result<Vec<T>> {
        match self.str(k) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::config(format!("invalid entry {s:?} in {k}")))
                })
                .collect(),
        }
    }

    fn flag(&self, k: &str) -> Result<bool> {
        self.get(k, false)
    }

    fn seed(&self) -> Result<u64> {
        self.get("seed", 0)
    }

    fn dim(&self, default: usize) -> Result<usize> {
        self.get("d", default)
    }

    fn pair_name(&self) -> String {
        self.text("pair", "eg")
    }

    fn pair(&self, default_dim: usize) -> Result<GeometryPair> {
        let d = self.dim(default_dim)?;
        let eps = self.get("eps-min", 1e-3)?;
        match self.pair_name().as_str() {
            "eg" => GeometryPair::eg(d, eps),
            "logbarrier" => GeometryPair::log_barrier(d, eps),
            "tempered" => GeometryPair::tempered(d, self.get("tau", 0.5)?, self.get("p", 2.0)?),
            "euclid" => GeometryPair::euclidean(Domain::uniform_box(d, 0.0, 1.0)?),
            other => Err(Error::config(format!(
                "unknown pair {other:?}; expected eg, logbarrier, tempered or euclid"
            ))),
        }
    }

    fn loss(&self, default: &str) -> Result<LossKind> {
        match self.text("loss", default).as_str() {
            "linear" => Ok(LossKind::RandomLinear),
            "quadratic" => Ok(LossKind::FixedQuadratic { a: None, b: 0.6 }),
            "alternating" => Ok(LossKind::AlternatingLinear { c0: None }),
            "fixed-linear" => Ok(LossKind::FixedLinear { c0: None }),
            "zero" => Ok(LossKind::zero()),
            other => Err(Error::config(format!(
                "unknown loss {other:?}; expected linear, quadratic, alternating, fixed-linear or zero"
            ))),
        }
    }

    fn grad_bound(&self) -> Result<f64> {
        self.get("grad-bound", 1.0)
    }

    fn learner(&self, default: &str) -> Result<LearnerKind> {
        match self.text("learner", default).as_str() {
            "omd" => Ok(LearnerKind::Omd),
            "ogd" => Ok(LearnerKind::Ogd),
            "eg" => Ok(LearnerKind::Eg),
            "perturbed" => Ok(LearnerKind::PerturbedOmd),
            other => Err(Error::config(format!(
                "unknown learner {other:?}; expected omd, ogd, eg or perturbed"
            ))),
        }
    }

    fn other_learner(&self) -> Result<LearnerKind> {
        match self.text("other", "ogd").as_str() {
            "omd" => Ok(LearnerKind::Omd),
            "ogd" => Ok(LearnerKind::Ogd),
            "eg" => Ok(LearnerKind::Eg),
            other => Err(Error::config(format!(
                "unknown learner {other:?}; expected omd, ogd or eg"
            ))),
        }
    }

    fn direction(&self, default: &str) -> Result<PerturbDirection> {
        match self.text("direction", default).as_str() {
            "uniform" => Ok(PerturbDirection::Uniform),
            "adversarial" => Ok(PerturbDirection::Adversarial),
            other => Err(Error::config(format!(
                "unknown direction {other:?}; expected uniform or adversarial"
            ))),
        }
    }

    /// `auto` is the theorem rule for the reparameterized learner and `1/√T` otherwise.
    fn eta_rule(&self, kind: LearnerKind) -> Result<EtaRule> {
        let raw = self.text("eta", "auto");
        if raw == "auto" {
            return Ok(if kind == LearnerKind::Ogd {
                EtaRule::Theorem
            } else {
                EtaRule::Sqrt(1.0)
            });
        }
        if let Some(c) = raw.strip_prefix("sqrt:") {
            return c
                .parse()
                .map(EtaRule::Sqrt)
                .map_err(|_| Error::config(format!("invalid step-size constant {c:?}")));
        }
        match raw.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(EtaRule::Fixed(v)),
            _ => Err(Error::config(format!(
                "invalid eta {raw:?}; expected auto, a positive number or sqrt:<c>"
            ))),
        }
    }

    fn out(&self) -> Option<PathBuf> {
        self.str("out").map(PathBuf::from)
    }
}

fn rule(name: &str) -> Result<MagnitudeRule> {
    match name {
        "zero" => Ok(MagnitudeRule::Zero),
        "eta" => Ok(MagnitudeRule::Linear),
        "eta1.5" => Ok(MagnitudeRule::ThreeHalves),
        "eta2" => Ok(MagnitudeRule::Quadratic),
        other => Err(Error::config(format!(
            "unknown perturbation rule {other:?}; expected zero, eta, eta1.5 or eta2"
        ))),
    }
}

fn rule_tag(r: MagnitudeRule) -> &'static str {
    match r {
        MagnitudeRule::Zero => "zero",
        MagnitudeRule::Linear => "eta",
        MagnitudeRule::ThreeHalves => "eta1.5",
        MagnitudeRule::Quadratic => "eta2",
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::config(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, content)
        .map_err(|e| Error::config(format!("cannot write {}: {e}", path.display())))
}

fn emit(s: &Settings, content: &str) -> Result<()> {
    match s.out() {
        Some(path) => write_file(&path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn sibling(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::CheckFailed(msg()))
    }
}

fn check_geometry(s: &Settings) -> Result<()> {
    let samples = s.get("samples", 1000)?;
    let tol = s.get("tol", 1e-10)?;
    let seed = s.seed()?;
    let pairs = if s.str("pair").is_some() {
        vec![s.pair(3)?]
    } else {
        let d = s.dim(3)?;
        let eps = s.get("eps-min", 1e-3)?;
        let mut v = vec![
            GeometryPair::eg(d, eps)?,
            GeometryPair::log_barrier(d, eps)?,
        ];
        for tau in [0.25, 0.5, 0.75] {
            v.push(GeometryPair::tempered(d, tau, 2.0)?);
        }
        v
    };
    let mut csv = String::from("pair,samples,max_deviation,pass\n");
    let mut failed = Vec::new();
    for pair in &pairs {
        let r = verify_assumption1(pair, samples, tol, seed)?;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            pair.label(),
            r.samples,
            fmt_f64(r.max_deviation),
            r.pass
        ));
        if !r.pass {
            failed.push(format!(
                "{} deviation {:e} at {:?}",
                pair.label(),
                r.max_deviation,
                r.worst_point
            ));
        }
    }
    emit(s, &csv)?;
    check(failed.is_empty(), || failed.join("; "))
}

fn theorem_eta(
    pair: &GeometryPair,
    losses: &reparam_omd::losses::Losses,
    seed: u64,
) -> Result<f64> {
    let c = estimate_constants(pair, losses, 200, seed)?;
    step_size_theorem(
        losses.horizon() as f64,
        c.diameter,
        c.g_for_rule(),
        losses.spec.grad_bound,
    )
}

fn run(s: &Settings) -> Result<()> {
    let pair = s.pair(3)?;
    let kind = s.learner("omd")?;
    let seed = s.seed()?;
    let horizon = s.get("T", 100)?;
    let losses = LossSequence::new(
        s.loss("linear")?,
        horizon,
        pair.dim(),
        s.grad_bound()?,
        seed,
    )
    .materialize(&pair.primal)?;
    let eta = match s.eta_rule(kind)? {
        EtaRule::Fixed(e) => e,
        EtaRule::Sqrt(c) => c / (horizon as f64).sqrt(),
        EtaRule::Theorem | EtaRule::TheoremWith { .. } => theorem_eta(&pair, &losses, seed)?,
    };
    let perturbation = match kind {
        LearnerKind::PerturbedOmd => Some(PerturbationSpec {
            rule: rule(&s.text("perturb", "eta2"))?,
            kappa: s.get("kappa", 0.5)?,
            seed: seed ^ 0x9e37_79b9_7f4a_7c15,
            direction: s.direction("uniform")?,
        }),
        _ => None,
    };
    let init = match s.text("init", "center").as_str() {
        "center" => Init::Center,
        "link-zero" => Init::LinkZero,
        other => {
            return Err(Error::config(format!(
                "unknown init {other:?}; expected center or link-zero"
            )))
        }
    };
    let trace = match run_learner(kind, &pair, &losses, eta, perturbation, &init) {
        Ok(t) => t,
        Err(failure) => {
            if let Some(path) = s.out() {
                write_file(&path, &trace_csv(&failure.partial))?;
            }
            return Err(failure.into());
        }
    };
    emit(s, &trace_csv(&trace))?;
    let comparator = compute_comparator(&losses, &pair)?;
    let r = regret_of_trace(&trace, &comparator)?;
    eprintln!(
        "{} on {}: eta {:e}, cumulative loss {:.6}, comparator {:.6} (certificate {:.1e}), regret {:.6}",
        kind.name(),
        pair.label(),
        eta,
        r.cumulative_loss,
        r.comparator_value,
        r.certificate,
        r.regret
    );
    Ok(())
}

fn closeness(s: &Settings) -> Result<()> {
    let pair = s.pair(3)?;
    let etas = s.list("etas", &[1e-1, 3e-2, 1e-2, 3e-3, 1e-3])?;
    let r = closeness_sweep(
        &pair,
        &etas,
        s.get("trials", 50)?,
        s.grad_bound()?,
        s.seed()?,
    )?;
    emit(s, &closeness_csv(&r))?;
    let Some(fit) = r.fit else {
        eprintln!("all distances vanish; slope fit skipped");
        return Ok(());
    };
    let (lo, hi, rms) = (
        s.get("min-slope", 1.4)?,
        s.get("max-slope", 2.1)?,
        s.get("max-rms", 0.15)?,
    );
    eprintln!("slope {:.4}, rms {:.4}", fit.slope, fit.rms);
    check(fit.slope >= lo && fit.slope <= hi && fit.rms <= rms, || {
        format!(
            "slope {:.4} outside [{lo}, {hi}] or rms {:.4} above {rms}",
            fit.slope, fit.rms
        )
    })
}

const HORIZONS: [usize; 4] = [300, 1000, 3000, 10000];

fn regret(s: &Settings) -> Result<()> {
    let pair = s.pair(5)?;
    let kind = s.learner("ogd")?;
    let cfg = SweepConfig {
        pair,
        kind,
        loss: s.loss("linear")?,
        grad_bound: s.grad_bound()?,
        horizons: s.list("horizons", &HORIZONS)?,
        reps: s.get("reps", 5)?,
        eta: s.eta_rule(kind)?,
        seed: s.seed()?,
        perturbation: None,
        init: Init::Center,
        eps_exponent: s.opt("eps-exponent")?,
    };
    let r = regret_sweep(&cfg)?;
    emit(s, &sweep_csv(&r.rows))?;
    let Some(fit) = r.fit else {
        eprintln!("some mean regret is not positive; slope fit skipped");
        return Ok(());
    };
    eprintln!("slope {:.4}, rms {:.4}", fit.slope, fit.rms);
    let lo = s.opt::<f64>("min-slope")?.unwrap_or(f64::NEG_INFINITY);
    let hi = s.opt::<f64>("max-slope")?.unwrap_or(f64::INFINITY);
    check(fit.slope >= lo && fit.slope <= hi, || {
        format!("slope {:.4} outside [{lo}, {hi}]", fit.slope)
    })
}

fn perturb(s: &Settings) -> Result<()> {
    let names: Vec<String> = s.list("rules", &["eta2".to_string(), "eta".to_string()])?;
    let cfg = PerturbSweepConfig {
        pair: s.pair(2)?,
        loss: s.loss("fixed-linear")?,
        grad_bound: s.grad_bound()?,
        horizons: s.list("horizons", &HORIZONS)?,
        rules: names.iter().map(|n| rule(n)).collect::<Result<_>>()?,
        kappa: s.get("kappa", 0.5)?,
        reps: s.get("reps", 5)?,
        seed: s.seed()?,
        direction: s.direction("adversarial")?,
        eta_scale: s.get("eta-scale", 1.0)?,
    };
    let r = perturbation_sweep(&cfg)?;
    emit(s, &perturb_csv(&r))?;
    for (rule, sweep) in &r.per_rule {
        if let Some(path) = s.out() {
            write_file(
                &sibling(&path, &format!("_{}", rule_tag(*rule)), "csv"),
                &sweep_csv(&sweep.rows),
            )?;
        }
        match &sweep.fit {
            Some(f) => eprintln!("rule {}: slope {:.4}", rule.name(), f.slope),
            None => eprintln!("rule {}: slope fit skipped", rule.name()),
        }
    }
    Ok(())
}

fn flow(s: &Settings) -> Result<()> {
    let pair = s.pair(3)?;
    let d = pair.dim();
    let start = pair.primal.center();
    let cfg = FlowConfig {
        loss: LossOracle::Quadratic {
            a: (1..=d).map(|i| i as f64).collect(),
            b: 0.6,
        },
        start,
        tau_end: s.get("tau-end", 1.0)?,
        steps: s.list("steps", &[1e-2, 5e-3, 2.5e-3])?,
        pair,
    };
    let r = flow_check(&cfg)?;
    emit(s, &flow_csv(&r))?;
    let (lo, hi) = (s.get("min-ratio", 0.3)?, s.get("max-ratio", 0.7)?);
    eprintln!("ratios {:?}", r.ratios);
    if r.rows.iter().all(|row| row.1 == 0.0) {
        return Ok(());
    }
    let monotone = r.rows.windows(2).all(|w| w[1].1 < w[0].1);
    check(
        monotone && r.ratios.iter().all(|q| *q >= lo && *q <= hi),
        || {
            format!(
                "deviation ratios {:?} not monotone within [{lo}, {hi}]",
                r.ratios
            )
        },
    )
}

fn figure(s: &Settings) -> Result<()> {
    let base = FigureConfig::default();
    let cfg = FigureConfig {
        dim: s.dim(base.dim)?,
        eps_min: s.get("eps-min", base.eps_min)?,
        eta: s.get("eta", base.eta)?,
        horizon: s.get("T", base.horizon)?,
        grad_bound: s.grad_bound()?,
        loss: s.loss("quadratic")?,
        seed: s.seed()?,
        other: s.other_learner()?,
    };
    let r = figure_eg(&cfg)?;
    emit(s, &figure_csv(&r))?;
    if let Some(path) = s.out() {
        let series = |name: &str, path: &[Vec<f64>]| Series {
            name: name.to_string(),
            points: path
                .iter()
                .map(|p| (p[0], p.get(1).copied().unwrap_or(0.0)))
                .collect(),
        };
        let plot = Plot {
            x_label: "x_0".into(),
            y_label: "x_1".into(),
            series: vec![series("eg", &r.eg), series(cfg.other.name(), &r.other)],
            log_x: false,
            log_y: false,
        };
        write_file(&sibling(&path, "", "svg"), &plot.to_svg()?)?;
    }
    let frac = r.max_distance / r.diameter;
    eprintln!(
        "max distance {:e} ({:.4}% of diameter)",
        r.max_distance,
        100.0 * frac
    );
    let limit = s.get("max-fraction", 0.05)?;
    check(frac <= limit, || {
        format!("max distance is {frac:.4} of the diameter, above {limit}")
    })
}

fn reconstruct(s: &Settings) -> Result<()> {
    let tau = s.get("tau", 0.5)?;
    let (q, reg, lo) = match s.pair_name().as_str() {
        "eg" => (
            Reparameterization::QuarterSquare,
            Regularizer::NegativeEntropy,
            0.01,
        ),
        "logbarrier" => (
            Reparameterization::Exponential,
            Regularizer::LogBarrier,
            0.1,
        ),
        "tempered" => (
            Reparameterization::power(tau)?,
            Regularizer::tempered(tau)?,
            0.01,
        ),
        "euclid" => (Reparameterization::Identity, Regularizer::Euclidean, 0.0),
        other => return Err(Error::config(format!("unknown pair {other:?}"))),
    };
    let map = ScalarMap::over_primal(q, s.get("x-lo", lo)?, 1.0)?.with_constant(s.get("c", 0.0)?);
    let h_max = s.get("h-max", 1e-3)?;
    let mut link = reconstruct_link(&map, h_max)?;
    if s.flag("corrupt")? {
        link = link.corrupted(|u| u * u)?;
    }
    let mut csv = String::from("u,link,link_d1,residual\n");
    for &u in link.grid() {
        let (v, dv) = link.eval(u).unwrap_or((f64::NAN, f64::NAN));
        let res = ode_residual(&map, &link, u)?;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(u),
            fmt_f64(v),
            fmt_f64(dv),
            fmt_f64(res)
        ));
    }
    emit(s, &csv)?;
    let residual = link_residual(&map, &link)?;
    let report = certify_reconstruction(&map, Some(reg), h_max)?;
    let mismatch = report.max_hessian_mismatch.unwrap_or(0.0);
    eprintln!(
        "{} vs {}: max residual {:e}, Hessian mismatch {:e}, convexity floor {:.6}, {} grid points",
        q.name(),
        reg.name(),
        residual,
        mismatch,
        report.convexity_floor,
        report.grid_points
    );
    check(residual <= 1e-6 && mismatch <= 1e-8, || {
        format!("residual {residual:e} or Hessian mismatch {mismatch:e} above tolerance")
    })
}

fn constants(s: &Settings) -> Result<()> {
    let pair = s.pair(3)?;
    let seed = s.seed()?;
    let horizon = s.get("T", 100)?;
    let losses = LossSequence::new(
        s.loss("linear")?,
        horizon,
        pair.dim(),
        s.grad_bound()?,
        seed,
    )
    .materialize(&pair.primal)?;
    let c = estimate_constants(&pair, &losses, s.get("samples", 1000)?, seed)?;
    let eta = step_size_theorem(
        horizon as f64,
        c.diameter,
        c.g_for_rule(),
        losses.spec.grad_bound,
    )?;
    let rows = [
        ("grad_bound", c.grad_bound),
        ("diameter", c.diameter),
        ("q_d1", c.q_d1),
        ("qinv_d1", c.qinv_d1),
        ("qinv_d2", c.qinv_d2),
        ("link", c.link),
        ("link_d2", c.link_d2),
        ("G", c.g()),
        ("eta_theorem", eta),
    ];
    let mut csv = String::from("name,value\n");
    for (k, v) in rows {
        csv.push_str(&format!("{k},{}\n", fmt_f64(v)));
    }
    emit(s, &csv)
}

fn plot(s: &Settings) -> Result<()> {
    let input = s
        .str("input")
        .ok_or_else(|| Error::config("plot needs --input"))?;
    let text = std::fs::read_to_string(input)
        .map_err(|e| Error::config(format!("cannot read {input}: {e}")))?;
    let table = Table::parse(&text)?;
    let x = s.text("x", table.header.first().map_or("", String::as_str));
    let ys: Vec<String> = match s.str("y") {
        Some(_) => s.list("y", &[])?,
        None => table.header.iter().filter(|h| **h != x).cloned().collect(),
    };
    let refs: Vec<&str> = ys.iter().map(String::as_str).collect();
    let svg = Plot::from_table(&table, &x, &refs, s.flag("log-x")?, s.flag("log-y")?)?.to_svg()?;
    emit(s, &svg)
}

fn dispatch(cmd: &Cmd, s: &Settings) -> Result<()> {
    match cmd {
        Cmd::CheckGeometry { .. } => check_geometry(s),
        Cmd::Run { .. } => run(s),
        Cmd::Closeness { .. } => closeness(s),
        Cmd::RegretSweep { .. } => regret(s),
        Cmd::PerturbSweep { .. } => perturb(s),
        Cmd::FlowCheck { .. } => flow(s),
        Cmd::FigureEg { .. } => figure(s),
        Cmd::Reconstruct { .. } => reconstruct(s),
        Cmd::Constants { .. } => constants(s),
        Cmd::Plot { .. } => plot(s),
    }
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let (_, sub) = matches.subcommand().expect("subcommand is required");
    let result = Settings::from_matches(sub).and_then(|s| dispatch(&cli.cmd, &s));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
