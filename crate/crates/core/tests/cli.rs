use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const LINEAR: &str = r#"{"physical":{"m":1,"hbar":1,"D":0,"Dprime":0}}"#;
const COSH: &str = r#"{"family":"cosh_soliton","invariants":[0,0.125,0,0,0,-0.25],"k":1,"v":1}"#;
const SWEEP: &str = r#"{"base":[-0.5,0.125,-0.5,0.5,0,0],"kappa":2,"axes":[{"name":"i4","min":-1,"max":1,"count":5},{"name":"i0","min":-1,"max":-0.25,"count":4}]}"#;

fn dg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dg"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// The `result` object of a `--json` run.
fn result(o: &Output) -> Value {
    let line = stdout(o).lines().find(|l| l.starts_with(r#"{"result""#)).unwrap().to_string();
    serde_json::from_str::<Value>(&line).unwrap()["result"].clone()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("linear.json"), LINEAR).unwrap();
    fs::write(dir.path().join("cosh.json"), COSH).unwrap();
    fs::write(dir.path().join("sweep.json"), SWEEP).unwrap();
    dir
}

#[test]
fn invariants_of_linear_class() {
    let w = workspace();
    let o = dg(w.path(), &["invariants", "--params", "linear.json"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("config: "));
    assert!(text.contains("invariants = (-0.5, 0.125, 0, 0, 0, 0)\nlinearizable = true"));

    let o = dg(w.path(), &["--json", "invariants", "--params", "linear.json"]);
    assert_eq!(result(&o)["invariants"], serde_json::json!([-0.5, 0.125, 0.0, 0.0, 0.0, 0.0]));
}

#[test]
fn gauge_apply_then_find() {
    let w = workspace();
    let o = dg(w.path(), &["--json", "gauge", "apply", "--params", "linear.json", "--lambda", "2", "--gamma", "0.5"]);
    let r = result(&o);
    assert!(r["invariant_deviation"].as_f64().unwrap() < 1e-12);
    fs::write(w.path().join("image.json"), serde_json::to_string(&r["params"]).unwrap()).unwrap();
    let o = dg(w.path(), &["--json", "gauge", "find", "--params", "linear.json", "--target", "image.json"]);
    let e = &result(&o)["element"];
    assert!((e["lambda"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((e["gamma"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn solution_writes_snapshots_and_residuals() {
    let w = workspace();
    let o = dg(w.path(), &["solution", "--spec", "cosh.json", "--grid", "-16:16:1024", "--t", "0:1:0.5", "--out", "out"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = w.path().join("out");
    for i in 0..3 {
        let csv = fs::read_to_string(out.join(format!("snapshot_{i:04}.csv"))).unwrap();
        assert!(csv.starts_with("t,x,theta1,theta2,re_psi,im_psi,rho\n"));
        assert_eq!(csv.lines().count(), 1025);
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("residuals.json")).unwrap()).unwrap();
    assert_eq!(report["snapshots"], 3);
    assert!(report["max_nse_linf"].as_f64().unwrap() < 1e-5);
    assert!(report["max_ap_linf"].as_f64().unwrap() < 1e-6);
}

#[test]
fn residual_of_evolved_snapshot() {
    let w = workspace();
    let o = dg(
        w.path(),
        &["evolve", "--spec", "cosh.json", "--grid", "-16:16:1024", "--t-end", "0.1", "--record-every", "100", "--out", "run"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = dg(
        w.path(),
        &["--json", "residual", "--field", "run/snapshot_0001.csv", "--inv=0,0.125,0,0,0,-0.25", "--grid", "-16:16:1024"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // The stored time derivatives are the evolver's right-hand side, so the
    // amplitude-phase residual vanishes up to the CSV's 17 digits.
    assert!(result(&o)["ap"]["linf"].as_f64().unwrap() < 1e-9);
    assert!(result(&o)["nse"]["linf"].as_f64().unwrap() < 1e-5);

    assert!(dg(w.path(), &["solution", "--spec", "cosh.json", "--grid", "-32:32:512", "--out", "sol"]).status.success());
    let o = dg(w.path(), &["residual", "--field", "sol/snapshot_0000.csv", "--inv=0,0.125,0,0,0,-0.25", "--grid", "-32:32:512"]);
    assert_eq!(o.status.code(), Some(2), "a field without time derivatives is rejected");
}

#[test]
fn classify_ground_state() {
    let w = workspace();
    let o = dg(w.path(), &["gaussian", "classify", "--inv=-0.5,0.125,0,0,-1,0", "--kappa", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("ConvergesToGroundState, sigma_inf = 0.840896"), "{}", stdout(&o));
}

#[test]
fn integrate_keeps_final_row() {
    let w = workspace();
    let o = dg(
        w.path(),
        &["gaussian", "integrate", "--inv=-0.5,0.125,0,0,-1,0", "--kappa", "2", "--horizon", "1", "--every", "300", "--out", "t.csv"],
    );
    assert!(o.status.success());
    let csv = fs::read_to_string(w.path().join("t.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "t,sigma,dsigma,s,ds,A,B,C");
    assert_eq!(rows.len(), 1 + 5);
    assert!(rows.last().unwrap().starts_with("1.0000000000000000e0,"));
}

#[test]
fn evolve_and_replay_agree() {
    let w = workspace();
    let o = dg(
        w.path(),
        &["evolve", "--spec", "cosh.json", "--grid", "-32:32:256", "--t-end", "0.5", "--record-every", "100", "--out", "run"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = w.path().join("run");
    let first = fs::read(run.join("observables.csv")).unwrap();
    assert!(run.join("run.json").exists());
    assert!(fs::read_to_string(run.join("snapshot_0000.csv")).unwrap().starts_with("t,x,theta1,theta2,re_psi,im_psi,rho,dt_theta1,dt_theta2\n"));
    fs::rename(&run, w.path().join("first")).unwrap();
    let o = dg(w.path(), &["replay", "--config", "first/run.json"]);
    assert!(o.status.success());
    assert_eq!(fs::read(run.join("observables.csv")).unwrap(), first);
}

#[test]
fn sweep_resumes_after_interruption() {
    let w = workspace();
    let args = ["sweep", "--grid", "sweep.json", "--horizon", "30", "--out", "s.csv", "--jobs", "4"];
    assert!(dg(w.path(), &args).status.success());
    let full = fs::read_to_string(w.path().join("s.csv")).unwrap();
    assert_eq!(full.lines().count(), 1 + 20);
    assert!(full.contains(",ConvergesToGroundState,"));

    // Cut mid-row, as an interrupted run would leave it.
    let cut = full.len() - full.lines().last().unwrap().len() / 2 - 1 - full.lines().nth(19).unwrap().len();
    fs::write(w.path().join("s.csv"), &full[..cut]).unwrap();
    let o = dg(w.path(), &["--json", "sweep", "--grid", "sweep.json", "--horizon", "30", "--out", "s.csv", "--jobs", "1"]);
    assert_eq!(result(&o)["resumed"], 18);
    assert_eq!(fs::read_to_string(w.path().join("s.csv")).unwrap(), full);
}

#[test]
fn sweep_rejects_foreign_file() {
    let w = workspace();
    fs::write(w.path().join("s.csv"), "a,b\n1,2\n").unwrap();
    let o = dg(w.path(), &["sweep", "--grid", "sweep.json", "--out", "s.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let w = workspace();
    assert_eq!(dg(w.path(), &["invariants", "--params", "missing.json"]).status.code(), Some(2));
    assert_eq!(dg(w.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(dg(w.path(), &["--help"]).status.code(), Some(0));
    let o = dg(w.path(), &["evolve", "--spec", "cosh.json", "--grid", "-32:32:256", "--t-end", "1", "--dt", "1"]);
    assert_eq!(o.status.code(), Some(2), "stability guard is a validation error");
    let o = dg(w.path(), &["--json", "gaussian", "integrate", "--inv=-0.5,0.125,0,0,0,0", "--sigma0", "1e-3", "--dsigma0=-10"]);
    assert_eq!(o.status.code(), Some(3));
    let err: Value = serde_json::from_str(stdout(&o).lines().last().unwrap()).unwrap();
    assert_eq!(err["exit_code"], 3);
}
