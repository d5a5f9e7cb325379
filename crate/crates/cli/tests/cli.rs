use esboot::es_estimation::{asymptotic_interval, conditional_es, gamma_hat};
use esboot::{qmle, rng, GarchParams, InnovationDist, QmleOptions, VolatilityModel};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn esboot(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esboot"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: serde_json::Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json.to_string()).unwrap();
    p
}

fn simulate_fixture(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let cfg = write_config(
        dir,
        "sim.json",
        serde_json::json!({
            "theta": {"omega": 0.079365, "alpha": 0.15, "beta": 0.8},
            "dist": {"kind": "student_t", "nu": 6.0},
            "n": n
        }),
    );
    let out = esboot(dir, &["simulate", "--config", cfg.to_str().unwrap(), "--seed", &seed.to_string()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("simulate.csv")
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn simulate_layout_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_fixture(dir.path(), 1000, 5);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,epsilon,sigma2_true");
    let rows: Vec<Vec<&str>> = lines[1..].iter().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.iter().filter(|r| !r[1].is_empty()).count(), 1000);
    assert_eq!(rows.iter().filter(|r| !r[2].is_empty()).count(), 1001);
    assert_eq!(rows.last().unwrap()[0], "1001");
    assert!(rows.last().unwrap()[1].is_empty());

    let first = std::fs::read(&csv).unwrap();
    simulate_fixture(dir.path(), 1000, 5);
    assert_eq!(first, std::fs::read(&csv).unwrap());
    simulate_fixture(dir.path(), 1000, 6);
    assert_ne!(first, std::fs::read(&csv).unwrap());
}

#[test]
fn nonstationary_parameters_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        serde_json::json!({
            "theta": {"omega": 0.1, "alpha": 0.3, "beta": 0.7},
            "dist": {"kind": "normal"},
            "n": 100
        }),
    );
    let out = esboot(dir.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "invalid");
    assert!(err["message"].as_str().unwrap().contains("alpha + beta < 1"));
}

#[test]
fn unknown_keys_and_missing_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "typo.json",
        serde_json::json!({
            "theta": {"omega": 0.1, "alpha": 0.1, "beta": 0.7},
            "dist": {"kind": "normal"},
            "n": 100,
            "burnin": 5
        }),
    );
    let out = esboot(dir.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("burnin"));

    let out = esboot(dir.path(), &["fit"]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = write_config(dir.path(), "nofile.json", serde_json::json!({"input": "missing.csv"}));
    let out = esboot(dir.path(), &["fit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_fit_es_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_fixture(dir.path(), 2000, 11);
    let cfg = write_config(dir.path(), "es.json", serde_json::json!({"input": csv, "alpha": 0.05, "gamma": 0.1}));
    let out = esboot(dir.path(), &["es", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("es.json"));

    let theta = GarchParams::new(0.079365, 0.15, 0.8).unwrap();
    let dist = InnovationDist::student_t(6.0).unwrap();
    let path = theta.simulate(&dist, 2000, 1000, &mut rng::stream(11, rng::tag::SIMULATE, 0)).unwrap();
    let fit = qmle::fit(&path.returns, &QmleOptions::default()).unwrap();
    let es = conditional_es(&fit, 0.05).unwrap();
    let g = gamma_hat(&fit, 0.05).unwrap();
    let asy = asymptotic_interval(&fit, &es, &g, 0.1).unwrap();

    assert_eq!(report["es"]["es_hat"].as_f64().unwrap(), es.es_hat);
    assert_eq!(report["es"]["tail_count"].as_u64().unwrap(), 101);
    assert_eq!(report["gamma_hat"]["nu_alpha_hat"].as_f64().unwrap(), g.nu_alpha_hat);
    assert_eq!(report["asymptotic_interval"]["lo"].as_f64().unwrap(), asy.lo);
    assert_eq!(report["theta_hat"]["beta"].as_f64().unwrap(), fit.theta_hat.beta);

    let cfg = write_config(dir.path(), "fit.json", serde_json::json!({"input": csv}));
    let out = esboot(dir.path(), &["fit", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let f = read_json(&dir.path().join("fit.json"));
    assert_eq!(f["loglik"].as_f64().unwrap(), fit.loglik);
    assert_eq!(f["residuals"].as_array().unwrap().len(), 2000);
}

#[test]
fn bootstrap_outputs_equal_lengths_and_ignore_workers() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_fixture(dir.path(), 500, 3);
    let cfg = write_config(dir.path(), "b.json", serde_json::json!({"input": csv, "alpha": 0.05, "b": 120}));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, w) in [(&a, "1"), (&b, "2")] {
        let o = esboot(out, &["bootstrap", "--config", cfg.to_str().unwrap(), "--seed", "9", "--workers", w]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ra = std::fs::read(a.join("replicates.csv")).unwrap();
    assert_eq!(ra, std::fs::read(b.join("replicates.csv")).unwrap());
    assert_eq!(String::from_utf8(ra).unwrap().lines().count(), 121);
    let j = read_json(&a.join("bootstrap.json"));
    let iv = &j["intervals"];
    assert_eq!(iv["ep"]["length"], iv["rt"]["length"]);
    assert_eq!(iv["b_effective"].as_u64().unwrap() as usize + j["failed"].as_u64().unwrap() as usize, 120);
}

#[test]
fn study_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = serde_json::json!({
        "id": "tiny",
        "theta0": {"omega": 0.079365, "alpha": 0.15, "beta": 0.8},
        "dist": {"kind": "normal"},
        "alpha": 0.05, "n": 300, "gamma": 0.1, "b": 100, "s": 6
    });
    let cfg = write_config(dir.path(), "study.json", serde_json::json!({"scenarios": [scenario]}));
    let out = esboot(dir.path(), &["study", "--config", cfg.to_str().unwrap(), "--seed", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("study.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scenario_id,n,interval_type,avg_coverage_pct,below_pct,above_pct,avg_length,excluded_count");
    let rows: Vec<Vec<&str>> = lines[1..].iter().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.iter().map(|r| r[2]).collect::<Vec<_>>(), ["EP", "RT", "SY"]);
    assert_eq!(rows[0][6], rows[1][6]);
    for r in &rows {
        assert_eq!((r[0], r[1]), ("tiny", "300"));
        let total: f64 = r[3..6].iter().map(|x| x.parse::<f64>().unwrap()).sum();
        assert!((total - 100.0).abs() < 1e-9);
    }
    let asy = std::fs::read_to_string(dir.path().join("study_asymptotic.csv")).unwrap();
    assert_eq!(asy.lines().nth(1).unwrap().split(',').nth(2), Some("ASY"));
}

#[test]
fn density_curves_written() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = serde_json::json!({
        "theta0": {"omega": 0.079365, "alpha": 0.15, "beta": 0.8},
        "dist": {"kind": "student_t", "nu": 6.0},
        "alpha": 0.05, "n": 400, "gamma": 0.1, "b": 100, "s": 40
    });
    let cfg = write_config(dir.path(), "d.json", serde_json::json!({"scenario": scenario, "grid": 200}));
    let out = esboot(dir.path(), &["density", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["density_simulated.csv", "density_bootstrap.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let pts: Vec<(f64, f64)> = text
            .lines()
            .skip(1)
            .map(|l| {
                let (x, y) = l.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect();
        assert_eq!(pts.len(), 200);
        let area: f64 = pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
        assert!((area - 1.0).abs() < 1e-3, "{name}: {area}");
    }
    let j = read_json(&dir.path().join("density.json"));
    assert_eq!(j["simulated"].as_array().unwrap().len() + j["excluded"].as_u64().unwrap() as usize, 40);
}
