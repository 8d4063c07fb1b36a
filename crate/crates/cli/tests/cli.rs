use std::path::Path;
use std::process::Command;

use absorption_cli::{emit_csv, read_csv, ExperimentConfig, Scenario, MANIFEST_NAME, THREADS_ENV};
use absorption_core::Table;
use proptest::prelude::*;

fn lab(args: &[&str], dir: &Path) -> (i32, serde_json::Value) {
    let status = Command::new(env!("CARGO_BIN_EXE_absorption-lab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove(THREADS_ENV)
        .output()
        .unwrap();
    let manifest = std::fs::read_to_string(dir.join(MANIFEST_NAME))
        .map(|t| serde_json::from_str(&t).unwrap())
        .unwrap_or(serde_json::Value::Null);
    (status.status.code().unwrap(), manifest)
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn conditions_report_the_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let (code, manifest) = lab(&["conditions"], dir.path());
    assert_eq!(code, 0);
    assert_eq!(manifest["summary"]["H1"], true);
    assert_eq!(manifest["summary"]["H1-1"], false);
    assert_eq!(manifest["passed"], true);
}

#[test]
fn flat_ode_table_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = lab(&["flat-ode"], dir.path());
    assert_eq!(code, 0);
    let table = read_csv(&dir.path().join("flat_ode.csv")).unwrap();
    assert_eq!(table.columns, ["a", "t", "phi"]);
    assert_eq!(table.rows.len(), 3 * 101);
    for row in &table.rows {
        let (a, t, phi) = (row[0], row[1], row[2]);
        assert!((phi / (a / (1.0 + a * t)) - 1.0).abs() <= 1e-8);
    }
}

#[test]
fn manifest_lists_every_file_with_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let (code, manifest) = lab(&["stationary"], dir.path());
    assert_eq!(code, 0);
    let listed: Vec<String> = manifest["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap().to_string()).collect();
    let mut on_disk: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != MANIFEST_NAME)
        .collect();
    on_disk.sort();
    let mut sorted = listed.clone();
    sorted.sort();
    assert_eq!(sorted, on_disk);
    assert!(!manifest["tolerances"].as_object().unwrap().is_empty());
    assert_eq!(manifest["config"]["scenario"], "stationary");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["n_list = []", "alpah = 1.5", "h = \"small\"", "scenario = \"flat-ode\""] {
        let config = write_config(dir.path(), text);
        let (code, _) = lab(&["theorem-b", "--config", &config], &dir.path().join("out"));
        assert_eq!(code, 2, "{text}");
    }
    let (code, _) = lab(&["conditions", "--config", "/nonexistent/config.toml"], dir.path());
    assert_eq!(code, 2);
    let (code, _) = lab(&["conditions", "--tolerance-scale", "-1"], dir.path());
    assert_eq!(code, 2);
}

#[test]
fn failed_checks_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // A tolerance scale this small leaves no room for round-off.
    let (code, manifest) = lab(&["flat-ode", "--tolerance-scale", "1e-20"], dir.path());
    assert_eq!(code, 3);
    assert_eq!(manifest["passed"], false);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "a_list = [1.0, 2.0]\nn_list = [2.0, 3.0]\nt_end = 0.1\nmax_step = 0.05\nh = 0.1",
    );
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_absorption-lab"))
            .args(["theorem-b", "--config", &config, "--out"])
            .arg(&out)
            .env(THREADS_ENV, threads)
            .output()
            .unwrap();
        assert_eq!(status.status.code(), Some(0));
        let files = ["limit_a1.csv", "limit_a2.csv", "margins.csv"].map(|f| std::fs::read(out.join(f)).unwrap());
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_absorption-lab"))
        .args(["conditions", "--out"])
        .arg(dir.path())
        .env(THREADS_ENV, "many")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn printed_config_loads_back() {
    let out = Command::new(env!("CARGO_BIN_EXE_absorption-lab"))
        .args(["theorem-c", "--print-config"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let config = ExperimentConfig::from_toml(&text, None).unwrap();
    assert_eq!(config, ExperimentConfig::defaults(Scenario::TheoremC));
}

#[test]
fn empty_table_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    emit_csv(&path, &Table::new(["r", "W"])).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "r,W\n");
    let back = read_csv(&path).unwrap();
    assert!(back.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trips_bit_for_bit(rows in prop::collection::vec(prop::collection::vec(prop::num::f64::ANY, 3), 0..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut table = Table::new(["x", "y", "z"]);
        for row in &rows {
            table.push(row.clone());
        }
        emit_csv(&path, &table).unwrap();
        let back = read_csv(&path).unwrap();
        prop_assert_eq!(&back.columns, &table.columns);
        prop_assert_eq!(back.rows.len(), rows.len());
        for (a, b) in back.rows.iter().flatten().zip(rows.iter().flatten()) {
            if b.is_nan() {
                prop_assert!(a.is_nan());
            } else {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn configs_round_trip(exponent in 1.01f64..1.99, dim in 1usize..5, h in 0.01f64..0.2, k in 0.1f64..10.0) {
        let config = ExperimentConfig {
            exponent,
            dimension: dim,
            h,
            growth_coefficient: k,
            ..ExperimentConfig::defaults(Scenario::TheoremC)
        };
        prop_assert_eq!(ExperimentConfig::from_toml(&config.to_toml(), None).unwrap(), config);
    }
}
