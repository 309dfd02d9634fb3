use std::path::Path;
use std::process::{Command, Output};

use gprg::flow::{run_gaussian_flow, FlowSettings};
use gprg::spectral::{power_law_spectrum, HermiteBasis};
use sha2::{Digest, Sha256};

fn gprg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gprg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn gprg")
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TOY_SPECTRUM: [&str; 6] = [
    "--set",
    "spectrum.kind=toy",
    "--set",
    "spectrum.lambda1=1",
    "--set",
    "spectrum.lambda2=0.1",
];

#[test]
fn validate_passes_on_default_quadrature() {
    let dir = tempfile::tempdir().unwrap();
    let o = gprg(dir.path(), &["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.contains(": PASS")).count(), 5);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn validate_fails_with_two_point_quadrature() {
    let dir = tempfile::tempdir().unwrap();
    let o = gprg(dir.path(), &["validate", "--quadrature-order", "2"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("overlap-120: FAIL"));
    assert!(stderr(&o).contains("overlap-120"));
}

#[test]
fn validate_subset() {
    let dir = tempfile::tempdir().unwrap();
    let o = gprg(dir.path(), &["validate", "--only", "orthonormality"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("orthonormality: PASS"));
    let o = gprg(dir.path(), &["validate", "--only", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ek_missing_sigma2_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = gprg(dir.path(), &["ek", "--set", "ek.eta=100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sigma2"), "{}", stderr(&o));
    assert!(!dir.path().join("gprg-out").exists());
}

#[test]
fn ek_power_law_report_has_one_row_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.ini");
    std::fs::write(
        &cfg,
        "[spectrum]\nkind = power_law\nmodes = 64\n\n[ek]\nsigma2 = 4\neta = 100\ntarget = 1, 1, 1\n",
    )
    .unwrap();
    let o = gprg(dir.path(), &["--config", "run.ini", "--out", "ek", "ek"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = read(dir.path().join("ek/ek_report.csv"));
    assert_eq!(report.lines().count(), 65);
    assert!(report.starts_with("k,lambda,ratio,learnable\n1,1e0,2.5e1,true\n"));
    // k = 5 sits exactly on the threshold 0.04 and counts as learnable.
    assert!(report.lines().nth(5).unwrap().ends_with(",true"));
    assert!(report.lines().nth(6).unwrap().ends_with(",false"));
    let pred = read(dir.path().join("ek/ek_predictions.csv"));
    assert!(pred.lines().nth(1).unwrap().starts_with("1,1e0,1e0,9.615384615384"));
}

#[test]
fn ek_toy_he2_mode_is_unlearnable() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["ek", "--set", "ek.sigma2=400", "--set", "ek.eta=100"];
    args.extend(TOY_SPECTRUM);
    let o = gprg(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = read(dir.path().join("gprg-out/ek_report.csv"));
    assert_eq!(report.lines().nth(2).unwrap(), "2,2e-1,5e-2,false");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = gprg(
        dir.path(),
        &["ek", "--set", "ek.sigma2=4", "--set", "ek.eta=100", "--set", "ek.sigma=4"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ek.sigma"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.ini"), "[flow]\nsigma2 = 4\neta = 100\nstop_rule = count(10)\n").unwrap();
    let o = gprg(dir.path(), &["--config", "c.ini", "flow", "--stop-rule", "learnability"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = read(dir.path().join("gprg-out/manifest.txt"));
    assert!(manifest.contains("config.flow.stop_rule = learnability\n"));
    assert!(read(dir.path().join("gprg-out/effective_theory.txt")).contains("kappa = 4\n"));
}

#[test]
fn flow_trajectory_matches_library_log() {
    let dir = tempfile::tempdir().unwrap();
    let o = gprg(dir.path(), &["flow", "--set", "flow.sigma2=4", "--set", "flow.eta=100"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let spectrum = power_law_spectrum(1.0, 2.0, 64, std::sync::Arc::new(HermiteBasis::new(64))).unwrap();
    let run = run_gaussian_flow(&spectrum, 4.0, 100.0, &FlowSettings::default()).unwrap();
    assert_eq!(read(dir.path().join("gprg-out/trajectory.csv")), run.trajectory_csv());
    assert_eq!(read(dir.path().join("gprg-out/effective_theory.txt")), run.theory.sidecar());
}

#[test]
fn weighted_flow_writes_weight_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["flow", "--weighted", "--set", "flow.sigma2=400", "--set", "flow.eta=100"];
    args.extend(TOY_SPECTRUM);
    let o = gprg(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let w = read(dir.path().join("gprg-out/weight.csv"));
    assert!(w.starts_with("x,w\n"));
    assert_eq!(w.lines().count(), 129);
    assert!(read(dir.path().join("gprg-out/effective_theory.txt")).contains("weighted = true"));
}

#[test]
fn count_zero_warns_about_learnable_modes() {
    let dir = tempfile::tempdir().unwrap();
    let o = gprg(
        dir.path(),
        &["flow", "--stop-rule", "count(0)", "--epsilon", "0.9", "--set", "flow.sigma2=4", "--set", "flow.eta=100"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = read(dir.path().join("gprg-out/manifest.txt"));
    assert!(manifest.lines().any(|l| l.starts_with("warning = mode 2 ")), "{manifest}");
    assert!(read(dir.path().join("gprg-out/trajectory.csv")).contains("learnable-integrated"));
}

#[test]
fn toy_single_run_has_three_row_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = gprg(dir.path(), &["toy", "--lambda1", "2", "--trials", "500"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = read(dir.path().join("gprg-out/toy_summary.csv"));
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0], "quantity,value,stderr");
    assert!(rows[1].starts_with("f1_experiment,"));
    assert!(rows[2].starts_with("f1_theory_leading,-1.0000000000000002e-2,"));
    assert!(rows[3].starts_with("f1_theory_exact_saddle,"));
    assert!(read(dir.path().join("gprg-out/toy_run.txt")).contains("eta = 1e2\n"));
    let cmp = read(dir.path().join("gprg-out/toy_weight_comparison.csv"));
    assert!(cmp.contains("ratio,2.0000000000000"), "{cmp}");
}

#[test]
fn toy_sweep_is_figure_ready() {
    let dir = tempfile::tempdir().unwrap();
    let o = gprg(dir.path(), &["toy", "--sweep", "lambda2=0:0.1:5", "--set", "toy.trials=200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = read(dir.path().join("gprg-out/toy_sweep.csv"));
    assert!(csv.starts_with("lambda2,f1_exp,f1_stderr,f1_theory\n0e0,"));
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.lines().nth(1).unwrap().ends_with(",0e0"));
}

#[test]
fn toy_defaults_to_the_lambda1_set() {
    let dir = tempfile::tempdir().unwrap();
    let o = gprg(dir.path(), &["toy", "--trials", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = read(dir.path().join("gprg-out/toy_sweep.csv"));
    let firsts: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(firsts, ["5e-1", "1e0", "2e0", "4e0"]);
}

#[test]
fn same_seed_gives_identical_outputs_at_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str, threads: &str| {
        let o = gprg(
            dir.path(),
            &["toy", "--lambda1", "1", "--trials", "3000", "--seed", "7", "--threads", threads, "--out", out],
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    };
    run("a", "1");
    run("b", "1");
    run("c", "3");
    for f in ["toy_summary.csv", "toy_weight.csv", "toy_run.txt", "toy_weight_comparison.csv"] {
        let a = read(dir.path().join("a").join(f));
        assert_eq!(a, read(dir.path().join("b").join(f)), "{f}");
        assert_eq!(a, read(dir.path().join("c").join(f)), "{f}");
    }
    let o = gprg(dir.path(), &["toy", "--lambda1", "1", "--trials", "3000", "--seed", "8", "--out", "d"]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(read(dir.path().join("a/toy_summary.csv")), read(dir.path().join("d/toy_summary.csv")));
}

#[test]
fn manifest_checksums_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = gprg(dir.path(), &["cumulants", "--method", "mc", "--num-samples", "20000", "--out", "cum"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("cum");
    let manifest = read(out.join("manifest.txt"));
    let mut listed = 0;
    for line in manifest.lines().filter(|l| l.starts_with("output.")) {
        let (key, sum) = line.split_once(" = ").unwrap();
        let name = key.strip_prefix("output.").unwrap().strip_suffix(".sha256").unwrap();
        let digest: String = Sha256::digest(std::fs::read(out.join(name)).unwrap())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        assert_eq!(digest, sum, "{name}");
        listed += 1;
    }
    let files = std::fs::read_dir(&out).unwrap().count();
    assert_eq!(listed + 1, files);
    assert_eq!(listed, 3);
    // Nothing was written next to the output directory.
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn cumulants_quadrature_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = gprg(dir.path(), &["cumulants"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = read(dir.path().join("gprg-out/cumulants.csv"));
    let row = csv.lines().find(|l| l.starts_with("1,1,2,2,")).unwrap();
    let value: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!((value - 4.0).abs() < 1e-8);
    assert!(row.ends_with(",quadrature"));
    let o = gprg(dir.path(), &["cumulants", "--set", "cumulants.basis=linear"]);
    assert_eq!(o.status.code(), Some(2));
}
