use std::path::Path;
use std::process::{Command, Output};

fn cpa(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_cpa")).args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "cpa {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn simulate_prints_one_report_row() {
    let text = stdout(&cpa(&[
        "simulate", "--trials", "3", "--set", "users=200", "--alpha", "1.1", "--beta", "1", "--pilots", "4",
    ]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("scheme,K,M,L,tau"));
    assert!(lines[1].starts_with("CPA,200,400,64,4"));
}

#[test]
fn validation_simulation_is_seed_deterministic() {
    let args = ["simulate", "--validation", "--trials", "4", "--seed", "11", "--set", "users=150"];
    assert_eq!(cpa(&args).stdout, cpa(&args).stdout);
}

#[test]
fn pi_table_feeds_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("pi.csv");
    let table_arg = table.to_str().unwrap();
    cpa(&["pi", "--j-max", "4", "--pi-trials", "300", "--out", table_arg]);
    let csv = std::fs::read_to_string(&table).unwrap();
    assert!(csv.starts_with("degree,estimate,stderr,trials,mode"));
    assert_eq!(csv.lines().count(), 5);
    let text = stdout(&cpa(&["analyze", "--alpha", "1.1", "--beta", "1", "--pi-table", table_arg]));
    assert!(text.contains("p_d="), "{text}");
    let ideal = stdout(&cpa(&["analyze", "--alpha", "1.1", "--beta", "1", "--ideal", "--q-trace"]));
    assert!(ideal.contains("converged=true"));
    assert!(ideal.contains("q[0]=1.000000000000"));
}

#[test]
fn sweep_writes_grid_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    cpa(&[
        "sweep", "--alphas", "0.8,1.2", "--betas", "1", "--pilots", "4", "--antennas", "100",
        "--pi-trials", "300", "--cache-dir", dir.path().to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    let rows = std::fs::read_to_string(&out).unwrap();
    let alphas: Vec<&str> = rows.lines().skip(1).map(|l| l.split(',').nth(6).unwrap()).collect();
    assert_eq!(alphas, ["0.8", "1.2"]);
    assert!(Path::new(dir.path()).read_dir().unwrap().count() >= 2);
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_cpa"))
        .args(["simulate", "--set", "pilots=0"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = Command::new(env!("CARGO_BIN_EXE_cpa")).args(["fig", "4"]).output().unwrap();
    assert!(!out.status.success());
}
