use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reparam-omd"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn trace_schema_and_precision() {
    let o = cli(&[
        "run",
        "--pair",
        "eg",
        "--d",
        "2",
        "--T",
        "3",
        "--learner",
        "ogd",
        "--eta",
        "0.1",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,loss,grad_norm,perturb_norm,x_0,x_1,u_0,u_1"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert_eq!(row[4], "2.5000000000000000e-1");
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn omd_trace_has_no_raw_columns() {
    let o = cli(&[
        "run",
        "--pair",
        "logbarrier",
        "--d",
        "3",
        "--T",
        "2",
        "--loss",
        "alternating",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,loss,grad_norm,perturb_norm,x_0,x_1,x_2"
    );
}

#[test]
fn configuration_errors_exit_with_one() {
    assert_eq!(code(&cli(&["run", "--pair", "nonsense"])), 1);
    assert_eq!(code(&cli(&["run", "--no-such-flag"])), 1);
    assert_eq!(code(&cli(&["run", "--loss", "cubic"])), 1);
    assert_eq!(code(&cli(&["run", "--eta", "-1"])), 1);
    assert_eq!(code(&cli(&["closeness", "--etas", "0.1,0.05,0.02"])), 1);
    assert_eq!(code(&cli(&["regret-sweep", "--horizons", "10,20"])), 1);
    assert_eq!(code(&cli(&["plot"])), 1);
    assert_eq!(code(&cli(&[])), 1);
    assert_eq!(code(&cli(&["--help"])), 0);
}

#[test]
fn numerical_failure_exits_with_two_and_keeps_the_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = cli(&[
        "run",
        "--pair",
        "tempered",
        "--T",
        "20",
        "--eta",
        "5",
        "--out",
        path(&out),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("smaller step size"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("t,loss,"));
}

#[test]
fn failed_checks_exit_with_three() {
    assert_eq!(code(&cli(&["reconstruct", "--pair", "eg", "--corrupt"])), 3);
    assert_eq!(code(&cli(&["check-geometry", "--tol", "0"])), 3);
    assert_eq!(code(&cli(&["figure-eg", "--max-fraction", "1e-9"])), 3);
    assert_eq!(code(&cli(&["reconstruct", "--pair", "logbarrier"])), 0);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# experiment\npair = logbarrier\nd = 4\nT = 5\nlearner = ogd\n",
    )
    .unwrap();
    let from_file = cli(&["run", "--config", path(&cfg)]);
    assert_eq!(code(&from_file), 0);
    let header = String::from_utf8(from_file.stdout).unwrap();
    assert!(header.lines().next().unwrap().ends_with("u_3"));
    assert_eq!(header.lines().count(), 6);
    let overridden = cli(&["run", "--config", path(&cfg), "--d", "2", "--T", "3"]);
    let text = String::from_utf8(overridden.stdout).unwrap();
    assert!(text.lines().next().unwrap().ends_with("u_1"));
    assert_eq!(text.lines().count(), 4);
    std::fs::write(&cfg, "pair logbarrier\n").unwrap();
    assert_eq!(code(&cli(&["run", "--config", path(&cfg)])), 1);
}

#[test]
fn sweep_schema_and_per_rule_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = cli(&[
        "regret-sweep",
        "--pair",
        "eg",
        "--d",
        "2",
        "--horizons",
        "20,40,80",
        "--reps",
        "2",
        "--out",
        path(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "T,eta,seed,regret,comparator,certificate"
    );
    assert_eq!(text.lines().count(), 7);

    let out = dir.path().join("perturb.csv");
    let o = cli(&[
        "perturb-sweep",
        "--horizons",
        "20,40,80",
        "--reps",
        "1",
        "--rules",
        "eta2,eta",
        "--out",
        path(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("perturb_eta2.csv").exists());
    assert!(dir.path().join("perturb_eta.csv").exists());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("rule,T,eta,magnitude,mean_regret,bound_G,bound_GF\n"));
}

#[test]
fn figure_writes_svg_and_plot_reads_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig.csv");
    assert_eq!(code(&cli(&["figure-eg", "--out", path(&out)])), 0);
    let svg = std::fs::read_to_string(dir.path().join("fig.svg")).unwrap();
    assert!(svg.contains(r#"viewBox="0 0 800 600""#) && svg.contains("x_0"));
    let plotted = dir.path().join("d.svg");
    let o = cli(&[
        "plot",
        "--input",
        path(&out),
        "--x",
        "t",
        "--y",
        "distance",
        "--out",
        path(&plotted),
    ]);
    assert_eq!(code(&o), 0);
    assert!(std::fs::read_to_string(&plotted)
        .unwrap()
        .contains("distance"));
    assert_eq!(
        code(&cli(&["plot", "--input", path(&out), "--x", "nope"])),
        1
    );
}

#[test]
fn seeds_change_output_and_repeats_do_not() {
    let args = |seed: &'static str| {
        [
            "run",
            "--pair",
            "tempered",
            "--T",
            "20",
            "--seed",
            seed,
            "--learner",
            "perturbed",
        ]
    };
    let a = cli(&args("1")).stdout;
    let b = cli(&args("1")).stdout;
    let c = cli(&args("2")).stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
}
