use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dynlsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynlsm")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = dynlsm(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small design so that the round trips stay fast.
fn write_design(dir: &Path, num_times: usize) -> std::path::PathBuf {
    let path = dir.join("design.json");
    let design = format!(
        r#"{{"n": 12, "T": {num_times}, "d": 2, "beta": 0.5,
            "init": {{"components": [
                {{"weight": 0.5, "mean": [0.8, 0.0], "variance": 0.3}},
                {{"weight": 0.5, "mean": [-0.8, 0.0], "variance": 0.3}}]}},
            "tau2": 0.01, "directed": true, "seed": 0}}"#
    );
    fs::write(&path, design).unwrap();
    path
}

#[test]
fn simulate_preset_writes_both_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["simulate", "--preset", "sim100-dense-small", "--seed", "7", "--out", s(&a)]);
    ok(&["simulate", "--preset", "sim100-dense-small", "--seed", "7", "--out", s(&b)]);
    for name in ["network.tsv", "truth.json"] {
        let x = fs::read(a.join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name} differs between runs");
    }
}

#[test]
fn unknown_preset_lists_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let out = dynlsm(&["simulate", "--preset", "no-such-design", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sim50-dense-small") && err.contains("asym-T-40"), "{err}");
}

#[test]
fn invalid_hyperparameter_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let design = write_design(dir.path(), 3);
    let data = dir.path().join("data");
    ok(&["simulate", "--design", s(&design), "--out", s(&data)]);
    let net = data.join("network.tsv");
    let out = dynlsm(&["fit", "--input", s(&net), "--sigma2", "-1", "--out", s(&dir.path().join("f.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("f.json").exists());
}

#[test]
fn malformed_input_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("bad.tsv");
    fs::write(&net, "n=3 T=2 directed=true\n1 0 1\n3 0 1\n").unwrap();
    let out = dynlsm(&["fit", "--input", s(&net), "--out", s(&dir.path().join("f.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn fit_eval_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let design = write_design(dir.path(), 3);
    let data = dir.path().join("data");
    ok(&["simulate", "--design", s(&design), "--seed", "11", "--out", s(&data)]);
    let (net, truth) = (data.join("network.tsv"), data.join("truth.json"));

    let fit_path = dir.path().join("fit.json");
    let printed = ok(&["fit", "--input", s(&net), "--alpha", "0.5", "--out", s(&fit_path)]);
    assert!(printed.contains("iterations:") && printed.contains("final objective:"));
    assert_eq!(printed.matches("auc=").count(), 3);
    let again = dir.path().join("fit2.json");
    ok(&["fit", "--input", s(&net), "--alpha", "0.5", "--out", s(&again)]);
    assert_eq!(fs::read(&fit_path).unwrap(), fs::read(&again).unwrap());

    let evaluated = ok(&["eval", "--fit", s(&fit_path), "--input", s(&net), "--truth", s(&truth)]);
    assert!(evaluated.contains("distance ratio") && evaluated.contains("beta estimate"));

    let report = dir.path().join("report");
    ok(&["report", "--fit", s(&fit_path), "--truth", s(&truth), "--out", s(&report)]);
    let movements = fs::read_to_string(report.join("movements.csv")).unwrap();
    assert_eq!(movements.lines().next().unwrap().split(',').count(), 1 + 2);
    assert_eq!(movements.lines().count(), 1 + 12);
    let positions = fs::read_to_string(report.join("positions.csv")).unwrap();
    assert_eq!(positions.lines().count(), 1 + 12 * 3);
    for t in 1..=3 {
        let svg = fs::read_to_string(report.join(format!("snapshot_{t}.svg"))).unwrap();
        assert!(svg.starts_with("<svg") && svg.matches("<circle").count() == 12);
    }
    let ratios = fs::read_to_string(report.join("ratios.csv")).unwrap();
    let integral: f64 = ratios
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[1] - v[0]) * v[2]
        })
        .sum();
    assert!((integral - 1.0).abs() < 1e-6, "density integrates to {integral}");
}

#[test]
fn report_without_truth_skips_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let design = write_design(dir.path(), 2);
    let data = dir.path().join("data");
    ok(&["simulate", "--design", s(&design), "--out", s(&data)]);
    let fit_path = dir.path().join("fit.json");
    ok(&["fit", "--input", s(&data.join("network.tsv")), "--init", "mds", "--out", s(&fit_path)]);
    let report = dir.path().join("report");
    ok(&["report", "--fit", s(&fit_path), "--out", s(&report)]);
    assert!(report.join("positions.csv").exists());
    assert!(!report.join("ratios.csv").exists());
}

#[test]
fn fitted_positions_score_above_chance() {
    let dir = tempfile::tempdir().unwrap();
    let design = write_design(dir.path(), 3);
    let data = dir.path().join("data");
    ok(&["simulate", "--design", s(&design), "--seed", "5", "--out", s(&data)]);
    let net = data.join("network.tsv");
    let fit_path = dir.path().join("fit.json");
    ok(&["fit", "--input", s(&net), "--out", s(&fit_path)]);
    let evaluated = ok(&["eval", "--fit", s(&fit_path), "--input", s(&net)]);
    assert!(evaluated.contains("method: vb"));
    let aucs: Vec<f64> = evaluated
        .lines()
        .filter_map(|l| l.trim().strip_prefix("t=").and_then(|r| r.split("auc=").nth(1)))
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(aucs.len(), 3);
    assert!(aucs.iter().all(|&a| a > 0.5), "{aucs:?}");
}

#[test]
fn truth_file_is_not_a_fit() {
    let dir = tempfile::tempdir().unwrap();
    let design = write_design(dir.path(), 2);
    let data = dir.path().join("data");
    ok(&["simulate", "--design", s(&design), "--out", s(&data)]);
    let out = dynlsm(&["eval", "--fit", s(&data.join("truth.json")), "--input", s(&data.join("network.tsv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mcmc_subcommand_and_method_flag_agree() {
    let dir = tempfile::tempdir().unwrap();
    let design = write_design(dir.path(), 2);
    let data = dir.path().join("data");
    ok(&["simulate", "--design", s(&design), "--out", s(&data)]);
    let net = data.join("network.tsv");
    let short = ["--burn-in", "50", "--samples", "100", "--thin", "5"];
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let mut first = vec!["mcmc", "--input", s(&net), "--out", s(&a)];
    first.extend(short);
    let mut second = vec!["fit", "--method", "mcmc", "--input", s(&net), "--out", s(&b)];
    second.extend(short);
    let printed = ok(&first);
    ok(&second);
    assert!(printed.contains("retained draws: 20"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let evaluated = ok(&["eval", "--fit", s(&a), "--input", s(&net)]);
    assert!(evaluated.contains("method: mcmc"));
}

#[test]
fn unknown_experiment_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dynlsm(&["experiment", "--name", "nope", "--replicates", "1", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha-sensitivity"));
}

#[test]
fn experiment_rerun_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["experiment", "--name", "auc-vs-T", "--replicates", "1", "--seed", "3", "--out", s(out)]);
    }
    let name = "auc_vs_T.csv";
    let table = fs::read_to_string(a.join(name)).unwrap();
    assert!(table.lines().count() >= 2);
    assert_eq!(table, fs::read_to_string(b.join(name)).unwrap());
}
