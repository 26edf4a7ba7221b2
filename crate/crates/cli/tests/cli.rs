use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_osc-transport"));
    c.env_remove("OSC_TRANSPORT_JOBS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn solve_to(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut a = vec!["solve"];
    a.extend_from_slice(args);
    a.extend_from_slice(&["--output", path.to_str().unwrap()]);
    let o = run(&a);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

#[test]
fn solve_reference_instance() {
    let o = run(&["solve", "--d", "27.83", "--a-max", "1", "--omega", "1"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["schema_version"], 1);
    assert!((num(&v["result"]["t_f"]) - 10.71).abs() < 5e-3);
    assert!((num(&v["result"]["t1"]) - 0.644).abs() < 2e-3);
    assert_eq!(v["protocol"]["segments"].as_array().unwrap().len(), 4);
    assert_eq!(v["diagnostics"]["pmp"]["passed"], true);
}

#[test]
fn solve_resonant() {
    let w = format!("{}", 2.0 * PI);
    let v = json(&run(&["solve", "--d", "1", "--a-max", "1", "--omega", &w]));
    assert_eq!(num(&v["result"]["t_f"]), 2.0);
    assert_eq!(v["result"]["resonant"], true);
    assert_eq!(v["protocol"]["segments"].as_array().unwrap().len(), 2);
    // a rounded 2π is not flagged resonant but still reaches T_abs
    let v = json(&run(&["solve", "--d", "1", "--a-max", "1", "--omega", "6.2832"]));
    assert!((num(&v["result"]["t_f"]) - 2.0).abs() < 1e-9);
}

#[test]
fn solve_band_in_t_abs_region() {
    let v = json(&run(&["solve", "--d", "1", "--a-max", "1", "--omega-minus", "0", "--omega-plus", "5.15"]));
    assert_eq!(num(&v["result"]["t_f"]), 2.0);
    assert_eq!(v["result"]["region"], "TAbsRegion");
    assert!((num(&v["result"]["sub_band"]["omega_plus"]) - (PI + 2.0)).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&run(&["solve", "--d", "1", "--a-max", "1", "--omega-minus", "13", "--omega-plus", "14"])), 2);
    assert_eq!(code(&run(&["solve", "--d", "-1", "--a-max", "1", "--omega", "1"])), 1);
    assert_eq!(code(&run(&["solve", "--d", "1", "--a-max", "1"])), 1);
    assert_eq!(code(&run(&["solve", "--d", "1", "--a-max", "1", "--omega", "1", "--omega-minus", "1", "--omega-plus", "2"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["sweep", "--fig", "5"])), 1);
    assert_eq!(code(&run(&["verify", "--solution", "/nonexistent/x.json"])), 1);
}

#[test]
fn round_trip_fixed_and_variable() {
    let dir = TempDir::new().unwrap();
    for (name, args) in [
        ("fixed.json", vec!["--d", "27.83", "--a-max", "1", "--omega", "1"]),
        ("two.json", vec!["--d", "2", "--a-max", "0.5", "--omega-minus", "0.1", "--omega-plus", "0.9"]),
        ("four.json", vec!["--d", "1", "--a-max", "1", "--omega-minus", "8.5", "--omega-plus", "11"]),
        ("tabs.json", vec!["--d", "1", "--a-max", "1", "--omega-minus", "2", "--omega-plus", "9"]),
    ] {
        let sol = solve_to(dir.path(), name, &args);
        let traj = dir.path().join("traj.csv");
        let o = run(&["simulate", "--protocol", sol.to_str().unwrap(), "-o", traj.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stdout));
        assert_eq!(json(&o)["boundary"]["passed"], true);
        let csv = fs::read_to_string(&traj).unwrap();
        assert!(csv.starts_with("t,x_h,v_h,x_w,v_w\n"));
        let o = run(&["verify", "--solution", sol.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn reference_trajectory_ends_at_rest() {
    let dir = TempDir::new().unwrap();
    let sol = solve_to(dir.path(), "s.json", &["--d", "27.83", "--a-max", "1", "--omega", "1"]);
    let v = json(&run(&["simulate", "--protocol", sol.to_str().unwrap()]));
    let f = &v["final"];
    for k in ["x_h", "v_h", "v_w"] {
        assert!(num(&f[k]).abs() < 1e-9);
    }
    assert!((num(&f["x_w"]) - 27.83).abs() < 1e-9);
}

#[test]
fn verify_rejects_perturbed_t1() {
    let dir = TempDir::new().unwrap();
    let sol = solve_to(dir.path(), "s.json", &["--d", "27.83", "--a-max", "1", "--omega", "1"]);
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&sol).unwrap()).unwrap();
    let t1 = num(&v["result"]["t1"]);
    v["result"]["t1"] = Value::from(t1 * 1.1);
    fs::write(&sol, serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(code(&run(&["verify", "--solution", sol.to_str().unwrap()])), 3);
}

#[test]
fn simulate_edge_cases() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.json");
    fs::write(&empty, r#"{"a_max": 1.0, "segments": []}"#).unwrap();
    let p = empty.to_str().unwrap();
    assert_eq!(code(&run(&["simulate", "--protocol", p, "--d", "0"])), 0);
    assert_eq!(code(&run(&["simulate", "--protocol", p, "--d", "1"])), 3);
    assert_eq!(code(&run(&["simulate", "--protocol", p])), 1);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"a_max": 1.0, "segments": [{"duration": 1.0}]}"#).unwrap();
    assert_eq!(code(&run(&["simulate", "--protocol", bad.to_str().unwrap(), "--d", "1"])), 1);
    fs::write(&bad, "not json").unwrap();
    assert_eq!(code(&run(&["simulate", "--protocol", bad.to_str().unwrap(), "--d", "1"])), 1);
    let w = format!("{}", 2.0 * PI);
    let res = solve_to(dir.path(), "res.json", &["--d", "1", "--a-max", "1", "--omega", &w]);
    assert_eq!(code(&run(&["simulate", "--protocol", res.to_str().unwrap()])), 0);
}

fn sweep(args: &[&str]) -> Vec<Vec<String>> {
    let mut a = vec!["sweep"];
    a.extend_from_slice(args);
    let o = run(&a);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn sweep_fig3_coincidences() {
    let rows = sweep(&["--fig", "3"]);
    assert_eq!(rows[0], ["d", "d_over_d_omega", "t_f", "T_abs", "t1", "region"]);
    let mut seen = 0;
    for r in &rows[1..] {
        let q: f64 = r[1].parse().unwrap();
        let ratio = r[2].parse::<f64>().unwrap() / r[3].parse::<f64>().unwrap();
        if [1.0, 4.0, 9.0].contains(&q) {
            assert!((ratio - 1.0).abs() < 1e-9, "{r:?}");
            seen += 1;
        } else if [0.5, 2.0, 6.0].contains(&q) {
            assert!(ratio > 1.0);
        }
    }
    assert_eq!(seen, 3);
}

#[test]
fn sweep_other_figures() {
    let rows = sweep(&["--fig", "4", "--step", "0.05"]);
    assert_eq!(rows[0][1], "omega_over_omega_res");
    assert!(rows[1..].iter().all(|r| r[2].parse::<f64>().unwrap() >= r[3].parse::<f64>().unwrap() * (1.0 - 1e-12)));
    let rows = sweep(&["--fig", "9"]);
    // SinglePlus up to ω+/ω_res = √2/4, then TwoInterval, then the T_abs region
    let region_at = |q: f64| {
        rows[1..]
            .iter()
            .find(|r| (r[3].parse::<f64>().unwrap() - q).abs() < 1e-9)
            .map(|r| r[7].clone())
            .unwrap()
    };
    assert_eq!(region_at(0.35), "SinglePlus");
    assert_eq!(region_at(0.36), "Interior(TwoInterval)");
    assert_eq!(region_at(0.82), "TAbsRegion");
    for fig in ["10", "11"] {
        let rows = sweep(&["--fig", fig, "--step", "0.1"]);
        assert_eq!(rows[0].len(), 9);
        assert!(rows[1..].iter().all(|r| r[4].parse::<f64>().unwrap() >= 2.0 - 1e-12));
    }
}

#[test]
fn outputs_are_byte_stable() {
    let a = run(&["sweep", "--fig", "10", "--step", "0.05", "--jobs", "3"]);
    let b = run(&["sweep", "--fig", "10", "--step", "0.05", "--jobs", "1"]);
    assert_eq!(a.stdout, b.stdout);
    let args = ["solve", "--d", "3", "--a-max", "2", "--omega-minus", "4", "--omega-plus", "7"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let args = ["oracle", "--d", "1", "--a-max", "1", "--omega", "5", "--grid", "0.02"];
    let (x, y) = (run(&args), bin().args(args).env("OSC_TRANSPORT_JOBS", "2").output().unwrap());
    assert_eq!(code(&x), 0);
    assert_eq!(x.stdout, y.stdout);
}

#[test]
fn jobs_flag_validation() {
    assert_eq!(code(&run(&["--jobs", "0", "sweep", "--fig", "3"])), 1);
    let o = bin().args(["sweep", "--fig", "3"]).env("OSC_TRANSPORT_JOBS", "many").output().unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn oracle_commands() {
    let v = json(&run(&["oracle", "--d", "1", "--a-max", "1", "--omega", "3.3", "--ignore-oscillator", "--grid", "0.02"]));
    assert!((num(&v["best_t_f"]) - 2.0).abs() < 1e-9);
    let o = run(&["oracle", "--d", "2", "--a-max", "1", "--omega-minus", "0", "--omega-plus", "1.2", "--patterns", "SinglePlus,TwoInterval", "--grid", "0.02"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert!(num(&v["relative_margin"]) > -1e-3);
    assert_eq!(code(&run(&["oracle", "--d", "1", "--a-max", "1", "--omega", "3", "--patterns", "Nope"])), 1);
}
