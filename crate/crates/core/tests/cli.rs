use std::process::{Command, Output};

use npo::cli::RunRecord;

fn npo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npo")).args(args).output().expect("binary runs")
}

fn record(args: &[&str]) -> RunRecord {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let out = npo(&full);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    RunRecord::from_json(std::str::from_utf8(&out.stdout).unwrap().trim()).unwrap()
}

fn value(args: &[&str]) -> f64 {
    record(args).value.unwrap()
}

#[test]
fn bound_examples() {
    let v = value(&["bound", "--N", "3", "--l", "1", "--lambda", "0.1", "--g", "0.1", "--D", "18"]);
    assert!((v - 5.186373002931507).abs() < 1e-12, "{v}");
    let v = value(&["bound", "--gamma", "0", "--lambda", "0", "--g", "1"]);
    assert!((v - 3.0).abs() < 1e-10, "{v}");
    let v = value(&["bound", "--gamma", "0", "--lambda", "1", "--g", "100", "--D", "15", "--fix-A", "0"]);
    assert!((v - 3.009831771).abs() < 1e-9, "{v}");
}

#[test]
fn bound_record_carries_history() {
    let rec = record(&["bound", "--gamma", "0", "--lambda", "1", "--g", "1", "--D", "16"]);
    assert_eq!(rec.command, "bound");
    assert_eq!(rec.dim, Some(16));
    assert_eq!(rec.history.len(), 16);
    assert_eq!(rec.history.last().unwrap().1, rec.value.unwrap());
    assert!(rec.optimal_a.is_some());
    assert_eq!(rec.version, npo::VERSION);
    assert!((rec.value.unwrap() - 3.50738835).abs() < 1e-8);
}

#[test]
fn exact_examples() {
    let rec = record(&["exact", "--n", "1", "--gamma", "2", "--g", "10"]);
    let sols = rec.results.as_array().unwrap();
    assert_eq!(sols.len(), 1);
    assert!((sols[0]["energy"].as_f64().unwrap() + 133.0).abs() < 1e-9);
    assert!((sols[0]["lambda"].as_f64().unwrap() + 1440.0).abs() < 1e-9);

    let rec = record(&["exact", "--n", "2", "--gamma", "1", "--g", "0.1"]);
    let e: Vec<f64> = rec.results.as_array().unwrap().iter().map(|s| s["energy"].as_f64().unwrap()).collect();
    assert!((e[0] - 2.817457557897335).abs() < 1e-12 && (e[1] - 7.382542442102665).abs() < 1e-12);

    let rec = record(&["exact", "--n", "1", "--gamma", "0", "--g", "0.5"]);
    let s = &rec.results[0];
    assert!(s["energy"].as_f64().unwrap().abs() < 1e-12);
    assert!((s["lambda"].as_f64().unwrap() + 3.5).abs() < 1e-12);
}

#[test]
fn perturb_examples() {
    let v = value(&["perturb", "--n", "0", "--N", "3", "--l", "0", "--g", "0.5"]);
    assert!((v - 0.741907668608869).abs() < 1e-14, "{v}");
    let v = value(&["perturb", "--n", "0", "--gamma", "0", "--g", "500"]);
    assert!((v - 0.001992603359200).abs() < 1e-15, "{v}");
    let v = value(&["perturb", "--n", "0", "--gamma", "0", "--g", "1e9"]);
    assert!(v > 0.0 && v < 1e-9, "{v}");
    let rec = record(&["perturb", "--n", "1", "--gamma", "0", "--g", "1", "--lambda", "0.01"]);
    let e = rec.results["energy"].as_f64().unwrap();
    assert!((e - (7.0 + 0.01 * rec.value.unwrap())).abs() < 1e-14);
}

#[test]
fn oracle_examples() {
    let rec = record(&["oracle", "--gamma", "0", "--lambda", "1", "--g", "1"]);
    let shot = rec.results["shooting"].as_f64().unwrap();
    let bound = rec.results["bound"].as_f64().unwrap();
    assert!((shot - 3.50738835).abs() < 1e-7 && (bound - 3.50738835).abs() < 1e-7);

    let rec = record(&["oracle", "--gamma", "0", "--lambda", "0", "--g", "1"]);
    assert!((rec.results["shooting"].as_f64().unwrap() - 3.0).abs() < 1e-8);
    assert!((rec.results["bound"].as_f64().unwrap() - 3.0).abs() < 1e-10);

    let v = value(&["oracle", "--gamma", "1", "--lambda", "-0.5617457557897334", "--g", "0.1", "--level", "1"]);
    assert!((v - 7.3825424421).abs() < 1e-8, "{v}");
}

#[test]
fn text_and_csv_output() {
    let out = npo(&["bound", "--gamma", "0", "--lambda", "1", "--g", "1", "--D", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("bound") && text.contains("optimal A") && text.contains("D=5"));

    let out = npo(&["bound", "--gamma", "0", "--lambda", "1", "--g", "1", "--D", "5", "--format", "csv"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("B,D,amax,g,gamma,lambda,level") && lines[0].ends_with("value,optimal_A,D"));
}

#[test]
fn run_record_round_trips_exactly() {
    let out = npo(&["bound", "--N", "3", "--l", "2", "--lambda", "-0.7", "--g", "0.3", "--D", "9", "--format", "json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rec = RunRecord::from_json(text.trim()).unwrap();
    assert_eq!(rec.to_json(), text.trim());
    let again = RunRecord::from_json(&rec.to_json()).unwrap();
    assert_eq!(again, rec);
    for ((d1, e1), (d2, e2)) in rec.history.iter().zip(&again.history) {
        assert_eq!(d1, d2);
        assert_eq!(e1.to_bits(), e2.to_bits());
    }
}

#[test]
fn invalid_input_exits_2() {
    for args in [
        &["bound", "--gamma", "0", "--g", "1"][..],
        &["bound", "--gamma", "0", "--lambda", "x", "--g", "1"],
        &["bound", "--N", "3", "--lambda", "1", "--g", "1"],
        &["bound", "--gamma", "0", "--lambda", "1", "--g", "0"],
        &["bound", "--gamma", "0", "--lambda", "1", "--g", "1", "--fix-A", "-3"],
        &["exact", "--n", "0", "--gamma", "0", "--g", "1"],
        &["oracle", "--gamma", "0", "--lambda", "1", "--g", "1", "--B", "2"],
        &["table", "--table", "6"],
        &["bound", "--gamma", "0", "--lambda", "1", "--g", "1", "--format", "yaml"],
    ] {
        let out = npo(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn tables_exit_on_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t1.csv");
    let out = npo(&["table", "--table", "1", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let body = std::fs::read_to_string(&csv).unwrap();
    assert!(body.starts_with("table,parameters,quantity,computed,published,diff,tolerance,pass,note"));
    assert_eq!(body.lines().count(), 25);

    // Table 3 carries one misprinted cell: the per-row tolerances fail it.
    let out = npo(&["table", "--table", "3"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8(out.stdout).unwrap().contains(",false,"));

    let loose = dir.path().join("loose.json");
    std::fs::write(&loose, r#"{"3": 1e-5}"#).unwrap();
    assert_eq!(npo(&["table", "--table", "3", "--tolerances", loose.to_str().unwrap()]).status.code(), Some(0));

    let tight = dir.path().join("tight.json");
    std::fs::write(&tight, r#"{"1": 1e-30}"#).unwrap();
    assert_eq!(npo(&["table", "--table", "1", "--tolerances", tight.to_str().unwrap()]).status.code(), Some(4));
}
