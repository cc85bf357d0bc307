//! End-to-end runs of the binary.

use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_squeezent")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn lower_output_and_threshold() {
    let o = run(&["lower", "--n", "2", "--t-min", "0.1", "--t-max", "3", "--steps", "5", "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let mut lines = s.lines();
    assert!(lines.next().unwrap().starts_with("# squeezent v"));
    assert!(s.contains("\nT,logZ,Jz,Jz2,Jx2,xi,K,lower_bound\n"));
    assert!(!s.contains("# generated"));
    let th = s.lines().find(|l| l.starts_with("# threshold T*=")).unwrap();
    let t: f64 = th["# threshold T*=".len()..].split_whitespace().next().unwrap().parse().unwrap();
    assert!((t - 1.0 / 3f64.ln()).abs() < 1e-6);
    let rows = s.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 6);
    let stamped = stdout(&run(&["lower", "--n", "2", "--steps", "2"]));
    assert!(stamped.lines().nth(1).unwrap().starts_with("# generated"));
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["upper", "--n", "4", "--t", "0.4", "--seed", "9", "--restarts", "2", "--no-timestamp"];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, run(&args).stdout);
    let l = ["lower", "--n", "30", "--model", "xx", "--steps", "20", "--ground", "--no-timestamp"];
    assert_eq!(run(&l).stdout, run(&l).stdout);
}

#[test]
fn auto_seed_is_recorded() {
    let s = stdout(&run(&["upper", "--n", "3", "--t", "0.5", "--ansatz", "simple", "--no-timestamp"]));
    assert!(s.contains("seed="));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["lower", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["lower", "--n", "1"]).status.code(), Some(2));
    assert_eq!(run(&["lower", "--n", "4", "--t-min", "0"]).status.code(), Some(2));
    assert_eq!(run(&["upper", "--n", "12", "--t", "0.5"]).status.code(), Some(3));
    assert_eq!(run(&["upper", "--n", "12", "--t", "0.5", "--n-max", "11"]).status.code(), Some(3));
    assert_eq!(run(&["selftest", "--no-timestamp"]).status.code(), Some(0));
    let bad = run(&["selftest", "--corrupt-cache", "--no-timestamp"]);
    assert_eq!(bad.status.code(), Some(5));
    assert!(stdout(&bad).contains("schur-cache,FAIL"));
}

#[test]
fn tightened_selftest_flags_marginal_checks() {
    let o = run(&["selftest", "--tighten", "1e6", "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(",MARGINAL,"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# sweep\nn = 6\nmodel = xx\nsteps = 3\nseed = 5\nrestarts = 2\n").unwrap();
    let s = stdout(&run(&["--config", cfg.to_str().unwrap(), "lower", "--steps", "4", "--no-timestamp"]));
    assert!(s.contains("# N=6 g=1 g_z=0 h=0"));
    assert_eq!(s.lines().filter(|l| !l.starts_with('#')).count(), 5);
    fs::write(&cfg, "nonsense = 1\n").unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "lower", "--n", "3"]).status.code(), Some(2));
}

#[test]
fn certificate_and_warm_start() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("c.json");
    let c = cert.to_str().unwrap();
    let first = run(&["upper", "--n", "4", "--t", "0.3", "--seed", "1", "--restarts", "2", "--certificate", c]);
    assert_eq!(first.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    assert_eq!(doc["certificate"]["N"], 4);
    let t0 = doc["certificate"]["t_bsa"].as_f64().unwrap();
    let lower = doc["lower"]["lower_bound"].as_f64().unwrap();
    assert!(lower <= t0 + 1e-9);
    let json = stdout(&run(&[
        "upper", "--n", "4", "--t", "0.3", "--seed", "2", "--restarts", "2", "--warm-start", c, "--format", "json",
    ]));
    let warm: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(warm["certificate"]["t_bsa"].as_f64().unwrap() <= t0 + 1e-9);
    let wrong_n = run(&["upper", "--n", "5", "--t", "0.3", "--warm-start", c]);
    assert_eq!(wrong_n.status.code(), Some(2));
}

#[test]
fn separable_above_threshold_at_n8() {
    let o = run(&["upper", "--n", "8", "--t", "1.2", "--seed", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["lower"]["lower_bound"].as_f64().unwrap(), 0.0);
    assert!(doc["certificate"]["t_bsa"].as_f64().unwrap() <= 0.02);
}

#[test]
fn inequalities_from_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("singlet.json");
    let singlet = squeezent::blocks::BlockDiagonalState::basis_cell(4, 0, 0).unwrap();
    fs::write(&path, singlet.to_json().unwrap()).unwrap();
    let s = stdout(&run(&["inequalities", "--state", path.to_str().unwrap()]));
    let doc: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert!((doc["ssi"]["lower_bound"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(doc["ssi"]["facet_values"]["total_variance"].as_f64().unwrap() < 0.0);
    assert_eq!(run(&["inequalities", "--n", "4"]).status.code(), Some(2));
}

#[test]
fn reproduce_writes_data_and_scripts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = run(&["reproduce", "--figure", "fig3", "--quick", "--out-dir", d, "--seed", "1", "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lower = fs::read_to_string(dir.path().join("fig3_lower.csv")).unwrap();
    assert!(lower.contains("T,lower_N2,lower_N3,lower_N4,lower_N5,lower_N6,lower_N7,lower_N8,asymptote"));
    let upper = fs::read_to_string(dir.path().join("fig3_upper_N3.csv")).unwrap();
    for row in upper.lines().filter(|l| !l.starts_with('#') && !l.starts_with('T')) {
        let gap: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(gap <= 0.01);
    }
    let gp = fs::read_to_string(dir.path().join("fig3.gp")).unwrap();
    assert!(gp.contains("fig3_lower.csv") && gp.contains("fig3_upper_N3.csv"));

    let o = run(&["reproduce", "--figure", "thresholds", "--out-dir", d, "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(0));
    let t = fs::read_to_string(dir.path().join("thresholds.csv")).unwrap();
    let xx1000: f64 = t
        .lines()
        .find(|l| l.starts_with("xx,1000,"))
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!((xx1000 - 0.5).abs() < 0.025);
    assert!(dir.path().join("thresholds.gp").exists());
}
