use std::path::Path;
use std::process::{Command, Output};

fn priceopt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_priceopt"))
        .args(args)
        .current_dir(dir)
        .env_remove("SOLVER_SEED")
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const TINY: &str = r#"{"n": 2, "k": 1, "a": [6, 1], "c": [0, 0], "p0": [0, 0], "delta": [0.5, 0.5],
"D": [[0, 0, 1], [1, 1, 1]]}"#;

#[test]
fn generate_solve_and_export() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&priceopt(&["gen", "--n", "50", "--bounds", "1,5,10,15", "--seed", "3", "--out", "i.json"], d));
    ok(&priceopt(&["solve", "--instance", "i.json", "--report", "r.csv", "--solution", "p.json"], d));
    let report = std::fs::read_to_string(d.join("r.csv")).unwrap();
    assert_eq!(report.lines().count(), 6);
    assert!(report.starts_with("instance_id,n,k,delta_mode,bounds_mode,start_id,"));
    let p: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(d.join("p.json")).unwrap()).unwrap();
    assert_eq!(p.len(), 50);
    ok(&priceopt(&["export-mip", "--instance", "i.json", "--out", "m.lp"], d));
    assert!(priceopt::io::LpModel::read(&d.join("m.lp")).is_ok());
    ok(&priceopt(&["solve", "--instance", "i.json", "--report", "r.jsonl", "--format", "lines"], d));
    let lines = std::fs::read_to_string(d.join("r.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 5);
    for line in lines.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
}

#[test]
fn oracle_and_project_on_the_worked_example() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "tiny.json", TINY);
    ok(&priceopt(&["oracle", "--instance", "tiny.json", "--out", "o.json"], d));
    let o: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("o.json")).unwrap()).unwrap();
    assert_eq!(o["p"], serde_json::json!([3.0, 0.0]));
    write(d, "q.json", "[2, 0.5]");
    ok(&priceopt(&["project", "--instance", "tiny.json", "--q", "q.json", "--out", "h.json"], d));
    let h: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("h.json")).unwrap()).unwrap();
    assert_eq!(h["p"], serde_json::json!([2.0, 0.0]));
    assert_eq!(h["delta_score"], serde_json::json!([4.0, 0.25]));
}

#[test]
fn compare_prints_the_adjusted_gap() {
    let tmp = tempfile::tempdir().unwrap();
    let out = priceopt(&["compare", "--base-profit", "-50", "--a", "10", "--b", "5"], tmp.path());
    ok(&out);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "-10");
    let zero = priceopt(&["compare", "--base-profit", "0", "--a", "1", "--b", "2"], tmp.path());
    assert_eq!(zero.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(priceopt(&["solve", "--bogus"], d).status.code(), Some(1));
    assert_eq!(priceopt(&[], d).status.code(), Some(1));
    assert_eq!(priceopt(&["--help"], d).status.code(), Some(0));

    write(d, "bad.json", r#"{"n": 2, "k": 1, "a": [1], "c": [0, 0], "p0": [0, 0], "delta": [1, 1], "D": []}"#);
    let out = priceopt(&["solve", "--instance", "bad.json", "--report", "r.csv"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains('a'));
    assert!(!d.join("r.csv").exists(), "no report on invalid input");

    // S = D + D' indefinite
    write(d, "indef.json", r#"{"n": 2, "k": 1, "a": [1, 1], "c": [0, 0], "p0": [0, 0], "delta": [1, 1],
        "D": [[0, 0, 1], [0, 1, 3], [1, 1, 1]]}"#);
    assert_eq!(priceopt(&["solve", "--instance", "indef.json", "--report", "r.csv"], d).status.code(), Some(2));
    assert!(!d.join("r.csv").exists());

    ok(&priceopt(&["gen", "--n", "30", "--out", "big.json"], d));
    let out = priceopt(&["oracle", "--instance", "big.json", "--out", "o.json"], d);
    assert_eq!(out.status.code(), Some(3));
    assert!(!d.join("o.json").exists());
}

#[test]
fn seed_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let run = |seed_env: Option<&str>, extra: &[&str], out: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_priceopt"));
        cmd.args(["gen", "--n", "20", "--out", out]).args(extra).current_dir(d).env_remove("SOLVER_SEED");
        if let Some(s) = seed_env {
            cmd.env("SOLVER_SEED", s);
        }
        assert!(cmd.output().unwrap().status.success());
        std::fs::read(d.join(out)).unwrap()
    };
    let from_env = run(Some("17"), &[], "a.json");
    let from_flag = run(None, &["--seed", "17"], "b.json");
    let default = run(None, &[], "c.json");
    assert_eq!(from_env, from_flag);
    assert_ne!(from_env, default);
}

#[test]
fn reports_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&priceopt(&["gen", "--n", "400", "--seed", "9", "--out", "i.json"], d));
    ok(&priceopt(&["solve", "--instance", "i.json", "--report", "a.csv"], d));
    ok(&priceopt(&["solve", "--instance", "i.json", "--report", "b.csv", "--parallel-starts", "3"], d));
    assert_eq!(std::fs::read(d.join("a.csv")).unwrap(), std::fs::read(d.join("b.csv")).unwrap());
    ok(&priceopt(&["sweep", "--instance", "i.json", "--k-list", "0.05,0.2", "--out", "s.csv"], d));
    let sweep = std::fs::read_to_string(d.join("s.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 4);
}
