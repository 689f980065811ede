use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segbubble"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SEGBUBBLE_DEFAULT_SEED")
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn constants_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["constants", "--N", "5"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("constants.json"));
    for key in ["b_n", "c_n", "a", "b", "sigma_jj"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("constants N=5"));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["command"], "constants");
    assert_eq!(m["domain_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn robin_is_reproducible_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let ball = dir.path().join("ball.json");
    std::fs::write(&ball, r#"{"kind":"ball","center":[0,0,0,0],"radius":1}"#).unwrap();
    let b = ball.to_str().unwrap();
    let mut bytes = Vec::new();
    for (k, jobs) in [(0, "1"), (1, "1"), (2, "4")] {
        let out = dir.path().join(format!("r{k}"));
        let o = run(&["robin", "--domain", b, "--x", "0.3,0,0,0", "--n", "20000", "--seed", "7", "--jobs", jobs], &out);
        assert_eq!(o.status.code(), Some(0));
        bytes.push(std::fs::read(out.join("robin.json")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    assert_eq!(bytes[0], bytes[2]);
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_segbubble"))
        .args(["robin", "--N", "4", "--x", "0.1,0,0,0", "--n", "1000", "--out"])
        .arg(dir.path())
        .env("SEGBUBBLE_DEFAULT_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("manifest.json"))["seed"], 11);
}

#[test]
fn verify_plmain0_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--lemma", "plmain0", "--N", "5", "--plot"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("verify.json"));
    assert_eq!(v[0]["lemma_id"], "plmain0");
    assert_eq!(v[0]["pass"], true);
    let svg = std::fs::read_to_string(dir.path().join("verify-plmain0.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn input_errors_exit_2_without_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["constants", "--bogus"],
        &["verify", "--lemma", "nope", "--N", "5"],
        &["pohozaev", "--N", "5"],
        &["robin", "--N", "4", "--x", "2,0,0,0"],
    ];
    for (k, args) in cases.iter().enumerate() {
        let out = dir.path().join(format!("e{k}"));
        let o = run(args, &out);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!out.exists(), "{args:?}");
    }
}

#[test]
fn pohozaev_and_reduced_solve() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["pohozaev", "--lambda", "1e-3"], &dir.path().join("p"));
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("p/pohozaev.json"));
    let r = v["ratio"].as_f64().unwrap();
    assert!((0.7..=1.3).contains(&r));
    for key in ["surface_value", "rhs", "rho"] {
        assert!(v.get(key).is_some());
    }

    // the ball has a single critical point
    let o = run(&["reduced-solve", "--N", "5", "--eps", "1e-3"], &dir.path().join("bad"));
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("bad").exists());
    let o = run(
        &["reduced-solve", "--N", "5", "--eps", "1e-3", "--xi1", "0.3,0,0,0,0", "--xi2", "-0.4,0,0,0,0"],
        &dir.path().join("r"),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("r/reduced.json"));
    assert!(v["balance_residuals"].as_array().unwrap().iter().all(|r| r.as_f64().unwrap().abs() < 1e-10));
    let o = run(&["critpoints", "--N", "5", "--multistart", "2"], &dir.path().join("c"));
    assert_eq!(o.status.code(), Some(0));
    let pts = json(&dir.path().join("c/critpoints.json"));
    assert!(pts.as_array().is_some_and(|a| !a.is_empty()));
}

#[test]
fn residual_scan_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["residual-scan", "--N", "5", "--lambda-grid", "0.04,0.02,0.01", "--beta-fraction", "0.5", "--plot"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("residual.csv")).unwrap();
    assert!(csv.starts_with("N,component,lambda,eps,beta,term,norm,stderr"));
    assert!(csv.lines().any(|l| l.contains(",G3,")));
    let s = json(&dir.path().join("residual.json"));
    assert!(s["fits"].as_array().is_some_and(|f| f.len() == 6));
    assert!(dir.path().join("residual-G1-1.svg").exists());
}
