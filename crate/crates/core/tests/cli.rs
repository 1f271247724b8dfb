use std::process::Command;

fn sls(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sls"))
        .args(args)
        .output()
        .expect("run sls")
}

fn stdout(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn solve_prints_fixture_value() {
    let out = sls(&["solve", "--fixture", "example1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let value: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("value "))
        .and_then(|v| v.trim().parse().ok())
        .expect("value line");
    assert!((value - 5.0 / 3.0).abs() < 1e-3, "{text}");
}

#[test]
fn br_prints_expected_cost() {
    let out = sls(&["br", "--fixture", "example1", "--prior", "0.8,0.1,0.1"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("expected_cost 1.2\n"), "{}", stdout(&out));
}

#[test]
fn eval_writes_identical_reports_for_identical_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("r{i}.json"))).collect();
    let csv = dir.path().join("r.csv");
    for p in &paths {
        let out = sls(&[
            "eval", "--policy", "got", "--oracle", "random-split", "--r", "0.25", "--n", "32",
            "--seed", "7", "--repeats", "3", "--out", p.to_str().unwrap(), "--csv",
            csv.to_str().unwrap(), "--dirichlet-counts", "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16",
            "--dirichlet-samples", "5", "--adversarial-alpha", "50", "--adversarial-samples", "3",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["schema"], "sls-eval/1");
    assert_eq!(report["per_item"].as_array().unwrap().len(), 32);
    assert_eq!(report["average_cases"].as_array().unwrap().len(), 8);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 33);
}

#[test]
fn play_emits_jsonl_transcript() {
    let out = sls(&["play", "--fixture", "example1", "--item", "Alan Turing"]);
    assert!(out.status.success());
    let lines: Vec<serde_json::Value> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(!lines.is_empty() && lines.len() <= 2);
    assert_eq!(lines[0]["set_size"], 3);
}

#[test]
fn config_file_sets_variant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("variant.json");
    std::fs::write(&cfg, r#"{"m": 2, "d": 2, "cfr_iterations": 50}"#).unwrap();
    let out = sls(&[
        "eval", "--policy", "uot", "--oracle", "feature-split", "--n", "20", "--r", "0.33",
        "--config", cfg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["config"]["m"], 2);
    assert_eq!(report["repeats"], 1);
}

#[test]
fn interactive_reads_answers() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_sls"))
        .args(["interactive", "--fixture", "example1"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"maybe\ny\ny\ny\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("please answer y or n"));
    assert!(text.contains("It is "), "{text}");
}

#[test]
fn usage_errors_exit_non_zero() {
    assert!(!sls(&[]).status.success());
    assert!(!sls(&["solve"]).status.success());
    assert!(!sls(&["solve", "--fixture", "nope"]).status.success());
    assert!(!sls(&["br", "--fixture", "example1", "--prior", "0.5,0.5"]).status.success());
}
