//! End-to-end tests of the command-line tool.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

const CHAIN: &str = r#"{
  "variables": [
    {"name": "W", "states": ["0", "1"]},
    {"name": "X", "states": ["0", "1"]},
    {"name": "U_Y", "states": ["0", "1"]},
    {"name": "Y", "states": ["0", "1"]}
  ],
  "edges": [["W", "X"], ["X", "Y"], ["U_Y", "Y"]],
  "cpts": {
    "W": {"parents": [], "rows": [[0.5, 0.5]]},
    "X": {"parents": ["W"], "rows": [[1, 0], [0, 1]]},
    "U_Y": {"parents": [], "rows": [[0.9, 0.1]]},
    "Y": {"parents": ["X", "U_Y"], "rows": [[1, 0], [0, 1], [0, 1], [1, 0]]}
  },
  "background": {"roots": ["U_Y"]}
}"#;

const PAIR: &str = r#"{
  "variables": [
    {"name": "A", "states": ["lo", "hi"]},
    {"name": "B", "states": ["ok", "slow"]}
  ],
  "edges": [["A", "B"]],
  "cpts": {
    "A": {"parents": [], "rows": [[0.7, 0.3]]},
    "B": {"parents": ["A"], "rows": [[0.9, 0.1], [0.2, 0.8]]}
  }
}"#;

/// `Z = X_1 and X_2` with both sources copying a fair context.
const TRANSPORT: &str = r#"{
  "variables": [
    {"name": "Z", "states": ["0", "1"]},
    {"name": "X_1", "states": ["0", "1"]},
    {"name": "X_2", "states": ["0", "1"]},
    {"name": "C", "states": ["0", "1"]}
  ],
  "mechanism": {"scope": ["Z"], "given": ["X_1", "X_2"], "rows": [[1, 0], [1, 0], [1, 0], [0, 1]]},
  "clients": [
    {"scope": ["X_1"], "given": ["C"], "rows": [[1, 0], [0, 1]]},
    {"scope": ["X_2"], "given": ["C"], "rows": [[1, 0], [0, 1]]}
  ],
  "context": {"scope": ["C"], "rows": [[0.5, 0.5]]},
  "joint": {"scope": ["Z", "X_1", "X_2", "C"], "rows": [[0.5, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0.5]]}
}"#;

const PRIVACY: &str = r#"{
  "variables": [
    {"name": "Z", "states": ["0", "1"]},
    {"name": "X_1", "states": ["0", "1"]},
    {"name": "X_2", "states": ["0", "1"]},
    {"name": "C", "states": ["0", "1"]}
  ],
  "mechanism": {"scope": ["Z"], "given": ["X_1", "X_2"], "rows": [[1, 0], [1, 0], [1, 0], [0, 1]]},
  "prior": {"scope": ["C"], "rows": [[0.5, 0.5]]},
  "disclosures": [
    {"stakeholder": 0, "candidates": {"time": 0.0, "region": 0.0}},
    {"stakeholder": 1, "candidates": {"time": 0.4, "region": 0.2},
     "revealed": {"scope": ["X_1"], "given": ["C"], "rows": [[0.5, 0.5], [0.5, 0.5]]}},
    {"stakeholder": 2, "candidates": {"time": 0.1, "region": 0.6, "weather": 0.0},
     "revealed": {"scope": ["X_2"], "given": ["C"], "rows": [[1, 0], [0, 1]]}}
  ]
}"#;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn run<I, S>(args: I) -> Run
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = Command::new(env!("CARGO_BIN_EXE_causal-cloud")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn row(v: &Value) -> Vec<f64> {
    v["rows"][0].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn close(a: f64, b: f64) {
    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
}

#[test]
fn validate_reports_structure() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "chain.json", CHAIN);
    let r = run(["validate", s(&m)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert_eq!(v["nodes"], 4);
    assert_eq!(v["edges"], 3);
    assert_eq!(v["state_space"], 16);
}

#[test]
fn observational_and_interventional_queries() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "chain.json", CHAIN);
    let q = run(["query", s(&m), "--target", "Y", "--evidence", "W=1"]);
    assert_eq!(q.code, 0, "{}", q.stderr);
    let p = row(&q.json());
    close(p[0], 0.1);
    close(p[1], 0.9);
    let d = run(["do", s(&m), "--target", "Y", "--set", "X=0"]);
    assert_eq!(d.code, 0, "{}", d.stderr);
    close(row(&d.json())[1], 0.1);
}

#[test]
fn exact_and_approximate_counterfactuals_differ_on_the_chain() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "chain.json", CHAIN);
    let base = ["counterfactual", s(&m), "--target", "Y", "--set", "X=0", "--evidence", "X=1,Y=1"];
    let exact = run(base.iter().copied().chain(["--exact"]));
    assert_eq!(exact.code, 0, "{}", exact.stderr);
    close(row(&exact.json())[0], 1.0);
    let approx = run(base.iter().copied().chain(["--approx"]));
    assert_eq!(approx.code, 0, "{}", approx.stderr);
    close(row(&approx.json())[0], 0.9);
}

#[test]
fn counterfactual_certificate_is_tight_on_the_chain() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "chain.json", CHAIN);
    let r = run(["certificate", "cf", s(&m), "--set", "X=0", "--target", "Y", "--evidence-vars", "X,Y"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    // H(Y | W) with Y = W xor U_Y, U_Y ~ Bernoulli(0.1).
    let h = -(0.1f64 * 0.1f64.log2() + 0.9 * 0.9f64.log2());
    close(v["bound_bits"].as_f64().unwrap(), h);
    close(v["divergence_bits"].as_f64().unwrap(), h);
    assert_eq!(v["holds"], true);
    assert_eq!(v["conditioning"], serde_json::json!(["W"]));
}

#[test]
fn transport_and_its_certificate() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "transport.json", TRANSPORT);
    let t = run(["transport", s(&f)]);
    assert_eq!(t.code, 0, "{}", t.stderr);
    let v = t.json();
    assert!(v.to_string().contains("0.5"), "{v}");
    let c = run(["certificate", "transport", s(&f)]);
    assert_eq!(c.code, 0, "{}", c.stderr);
    let v = c.json();
    close(v["divergence_bits"].as_f64().unwrap(), 0.0);
    close(v["bound_bits"].as_f64().unwrap(), 0.0);
}

#[test]
fn context_choice_and_prediction() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "privacy.json", PRIVACY);
    let r = run(["pick-context", s(&f)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.json();
    assert_eq!(v["context"], "time");
    close(v["total_bits"].as_f64().unwrap(), 0.5);

    let p = run(["predict-outcome", s(&f)]);
    assert_eq!(p.code, 0, "{}", p.stderr);
    let text = p.stdout.clone();
    // p̄(Z = 1) = Σ_c 0.5 · 0.5 · [x_2 = c = 1] = 0.25; bound = 1 bit.
    assert!(text.contains("0.25"), "{text}");
}

#[test]
fn sandbox_integration_needs_randomized_data() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "pair.json", PAIR);
    let obs = dir.path().join("obs.csv");
    let r = run(["--seed", "3", "--out", s(&obs), "sample", s(&m), "--n", "2000"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let refused = run(["sandbox-integrate", s(&m), "--var", "B", "--data", s(&obs)]);
    assert_eq!(refused.code, 2, "{}", refused.stderr);

    let rnd = dir.path().join("rnd.csv");
    let r = run(["--seed", "3", "--out", s(&rnd), "sample", s(&m), "--n", "20000", "--randomize", "A"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let ok = run(["sandbox-integrate", s(&m), "--var", "B", "--data", s(&rnd)]);
    assert_eq!(ok.code, 0, "{}", ok.stderr);
    let b = &ok.json()["cpts"]["B"]["rows"];
    assert!((b[1][1].as_f64().unwrap() - 0.8).abs() < 0.03, "{b}");
}

#[test]
fn policy_search_and_debug_query() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "pair.json", PAIR);
    let r = run(["optimize-policy", s(&m), "--var", "A", "--target", "B", "--values", "1,0"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = r.stdout.clone();
    // Setting A = lo maximizes p(B = ok) = 0.9.
    assert!(text.contains("0.9"), "{text}");

    let d = run([
        "debug-query", s(&m), "--x", "A", "--from", "hi", "--to", "lo", "--y", "B", "--observed", "slow", "--target",
        "ok",
    ]);
    assert_eq!(d.code, 0, "{}", d.stderr);
    let v = d.json();
    close(v["probability"].as_f64().unwrap(), 0.9);
    assert!(v["bound"].is_number() || v["bound"].is_object(), "{v}");
}

#[test]
fn privacy_experiment_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let r = run(["--seed", "5", "--out", s(p), "experiment", "privacy", "--step", "0.1", "--n", "500"]);
        assert_eq!(r.code, 0, "{}", r.stderr);
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("r,"), "{text}");
    assert_eq!(text.lines().count(), 7);
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 5);

    let c = dir.path().join("c.csv");
    let r = run(["--seed", "6", "--out", s(&c), "experiment", "privacy", "--step", "0.1", "--n", "500"]);
    assert_eq!(r.code, 0);
    assert_ne!(text, fs::read_to_string(&c).unwrap());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "chain.json", CHAIN);
    assert_eq!(run(["query", s(&m), "--target", "Q"]).code, 1);
    assert_eq!(run(["query", s(&m)]).code, 1);
    assert_eq!(run(["no-such-command"]).code, 1);
    let bad = write(&dir, "bad.json", "{ not json");
    assert_eq!(run(["validate", s(&bad)]).code, 1);
    let cyclic = write(&dir, "cyclic.json", &CHAIN.replace(r#"["W", "X"]"#, r#"["W", "X"], ["Y", "W"]"#));
    assert_eq!(run(["validate", s(&cyclic)]).code, 1);
    // W = 0 forces X = 0, so this evidence is impossible.
    let r = run(["counterfactual", s(&m), "--target", "Y", "--set", "X=0", "--evidence", "W=0,X=1", "--exact"]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert_eq!(run(["--help"]).code, 0);
}
