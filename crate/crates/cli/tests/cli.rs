use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn dcwelfare(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcwelfare"))
        .args(args)
        .arg("--out")
        .arg(out)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

/// Data rows of a CSV written by the tool, header comment stripped.
fn rows(path: &Path) -> Vec<Vec<String>> {
    read(path).lines().skip(2).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn stat(rows: &[Vec<String>], name: &str, param: &str) -> f64 {
    rows.iter().find(|r| r[0] == name && r[1] == param).unwrap()[2].parse().unwrap()
}

#[test]
fn welfare_reports_log_sum_for_quasilinear_logit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcwelfare(&["welfare", "--model", "fixtures/quasilinear_logit.json", "-s", "prices=0"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = rows(&dir.path().join("summary.csv"));
    let v = stat(&summary, "asw", "0.0000000000000000e0");
    assert!((v - (5.0 + 2f64.ln())).abs() < 1e-6, "{v}");
    assert_eq!(stat(&summary, "mass_at_income", ""), 0.5);
}

#[test]
fn header_hash_is_sha256_of_canonical_config() {
    let dir = tempfile::tempdir().unwrap();
    assert!(dcwelfare(&["report", "-s", "subsidy_points=3", "-s", "cdf_points=3"], dir.path()).status.success());
    let config = read(&dir.path().join("config.txt"));
    let (header, canonical) = config.split_once('\n').unwrap();
    let digest = hex::encode(Sha256::digest(canonical.as_bytes()));
    assert_eq!(header, format!("# dcwelfare 0.1.0 report config_sha256={digest}"));
    for name in ["curves.csv", "cdf.csv"] {
        assert_eq!(read(&dir.path().join(name)).lines().next().unwrap(), header);
    }
}

#[test]
fn written_config_reproduces_the_run() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    assert!(dcwelfare(&["bounds", "--ordered", "-s", "prices=0.4", "-s", "obs_count=50"], first.path())
        .status
        .success());
    let config = first.path().join("config.txt");
    assert!(dcwelfare(&["bounds", "--config", config.to_str().unwrap()], second.path()).status.success());
    for name in ["config.txt", "bounds.csv"] {
        assert_eq!(read(&first.path().join(name)), read(&second.path().join(name)), "{name}");
    }
}

#[test]
fn flags_override_set_which_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.conf");
    std::fs::write(&file, "# comment\nincome = 3\nmodel=quasilinear_probit\n").unwrap();
    let out = dir.path().join("out");
    let args = [
        "welfare",
        "--config",
        file.to_str().unwrap(),
        "-s",
        "income=4",
        "-s",
        "model=income_effect",
        "--model",
        "quasilinear_logit",
    ];
    assert!(dcwelfare(&args, &out).status.success());
    let config = read(&out.join("config.txt"));
    assert!(config.contains("\nincome=4.0\n"), "{config}");
    assert!(config.contains("\nmodel=\"quasilinear_logit\"\n"), "{config}");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["welfare", "--no-such-flag"],
        vec!["welfare", "-s", "no_such_key=1"],
        vec!["welfare", "-s", "income"],
        vec!["target", "-s", "criterion=median"],
        vec!["welfare", "--model", "no_such_model"],
        vec!["estimate", "-s", "bootstrap=1", "--data", "fixtures/incomes.csv"],
    ] {
        let out = dcwelfare(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn data_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "choice,price,income,instrument,cluster,stratum\n1,2.0,abc,0.1,0,0\n").unwrap();
    let missing = dir.path().join("missing.csv");
    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "p1,p2,income,q0\n0.5,1.0,4.0,0.4\n0.5,3.0,4.0,0.4\n").unwrap();
    for args in [
        vec!["estimate", "--data", bad.to_str().unwrap()],
        vec!["estimate", "--data", missing.to_str().unwrap()],
        vec!["bounds", "--ordered", "-s", "prices=0.5", "-s", &format!("observations={}", ragged.display())],
    ] {
        let out = dcwelfare(&args, &dir.path().join("out"));
        assert_eq!(out.status.code(), Some(3), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn numerical_failures_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    // the survival tail at z = 1 is far above the tolerance
    let out = dcwelfare(&["welfare", "-s", "truncation_value=1"], dir.path());
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn estimate_then_target_with_draws() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(dcwelfare(
        &["simulate", "-s", "kind=dataset", "-s", "rows=2000", "-s", "mask_nonbuyer_prices=true"],
        &data
    )
    .status
    .success());
    let fit = dir.path().join("fit");
    let csv = data.join("dataset.csv");
    let out = dcwelfare(&["estimate", "--data", csv.to_str().unwrap(), "-s", "bootstrap=6", "-s", "intervals=4"], &fit);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let diagnostics = rows(&fit.join("diagnostics.csv"));
    let imputed = diagnostics.iter().find(|r| r[0] == "imputed_from_cluster").unwrap()[1].parse::<usize>().unwrap();
    assert!(imputed > 0);
    let draws: serde_json::Value = serde_json::from_str(&read(&fit.join("draws.json"))).unwrap();
    assert_eq!(draws["models"].as_array().unwrap().len(), 6);

    let target = dir.path().join("target");
    let draws_path = fit.join("draws.json");
    let out = dcwelfare(
        &[
            "target",
            "--draws",
            draws_path.to_str().unwrap(),
            "-s",
            "income_lower=2",
            "-s",
            "income_upper=8",
            "-s",
            "penalty=1e4",
        ],
        &target,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(&target.join("report.json"))).unwrap();
    assert!(report["report"]["budget_residual"].as_f64().unwrap().abs() < 1e-2);
    assert_eq!(report["command"], "target");

    let model = fit.join("model.json");
    let out = dcwelfare(
        &["welfare", "--binary", "--model", model.to_str().unwrap(), "-s", "base_price=3"],
        &dir.path().join("w"),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulated_population_matches_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcwelfare(
        &["simulate", "--model", "income_effect", "-s", "prices=1", "-s", "income=4", "--seed", "3"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = rows(&dir.path().join("summary.csv"));
    let d: f64 = summary.iter().find(|r| r[0] == "sup_cdf_distance").unwrap()[2].parse().unwrap();
    // 10^4 agents: the 1% Kolmogorov critical value is 1.63/100
    assert!(d < 0.0163, "{d}");
    assert_eq!(rows(&dir.path().join("draws.csv")).len(), 10_000);
}

#[test]
fn target_reports_second_order_conditions_for_two_incomes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcwelfare(
        &[
            "target",
            "-s",
            "space=pointwise",
            "-s",
            "income_points=2",
            "-s",
            "income_lower=2",
            "-s",
            "income_upper=8",
            "-s",
            "budget=0.3",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(&dir.path().join("report.json"))).unwrap();
    let soc = &report["diagnostics"]["second_order"];
    assert_eq!(soc["determinant_positive"], true);
    assert!(soc["tangency_gap"].as_f64().unwrap() < 1e-6);
    assert!(
        report["diagnostics"]["uniform_objective"].as_f64().unwrap() <= report["report"]["objective"].as_f64().unwrap()
    );
}

#[test]
fn binary_welfare_averages_over_income() {
    let dir = tempfile::tempdir().unwrap();
    let base =
        ["welfare", "--binary", "--model", "income_effect", "-s", "base_price=0.8", "-s", "truncation_value=400"];
    let mut args = base.to_vec();
    args.extend(["-s", "income_file=fixtures/incomes.csv", "-s", "average_points=5"]);
    let out = dcwelfare(&args, &dir.path().join("avg"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let averages = rows(&dir.path().join("avg/averages.csv"));
    assert_eq!(averages.len(), 8);

    // empirical rows are the weighted mean of single-income runs
    let incomes = read(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/incomes.csv").as_path());
    let points: Vec<(String, f64)> = incomes
        .lines()
        .skip(1)
        .map(|l| {
            let (y, w) = l.split_once(',').unwrap();
            (y.to_string(), w.parse().unwrap())
        })
        .collect();
    let total: f64 = points.iter().map(|p| p.1).sum();
    let mut expected = [0.0; 4];
    for (k, (y, w)) in points.iter().enumerate() {
        let mut args = base.to_vec();
        let set = format!("income={y}");
        args.extend(["-s", &set]);
        let single = dir.path().join(format!("y{k}"));
        assert!(dcwelfare(&args, &single).status.success());
        for (e, r) in expected.iter_mut().zip(rows(&single.join("scenarios.csv"))) {
            *e += w / total * r[3].parse::<f64>().unwrap();
        }
    }
    let empirical: Vec<f64> = averages.iter().filter(|r| r[0] == "empirical").map(|r| r[3].parse().unwrap()).collect();
    for (a, e) in empirical.iter().zip(expected) {
        assert!((a - e).abs() < 1e-12, "{a} vs {e}");
    }
}
