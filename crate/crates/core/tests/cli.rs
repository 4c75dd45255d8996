use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_contact-lattice");

fn spec_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/specs").join(name)
}

fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_spec(dir: &Path, body: &str) -> String {
    let p = dir.join("spec.json");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

const SMALL_STATIONARY: &str = r#"{
  "model": "A",
  "experiment": "stationary",
  "rates": {"model": "A", "kappa": 1.0, "kappa_tilde": 1.0, "lambda": 0.2, "lambda_tilde": 0.1, "h": 1.0, "h_tilde": 1.0},
  "geometry": {"kind": "torus", "width": 6, "height": 6},
  "replicas": 3,
  "burn_in": 5.0,
  "horizon": 25.0,
  "master_seed": 7,
  "options": {"batches": 5}
}"#;

#[test]
fn validate_accepts_example_specs() {
    for e in fs::read_dir(spec_path("")).unwrap() {
        let p = e.unwrap().path();
        let o = cli(&["validate", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{p:?}: {}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["status"], "valid");
        assert_eq!(v["spec_sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn malformed_and_invalid_specs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_spec(dir.path(), "{ not json");
    assert_eq!(code(&cli(&["validate", &p])), 1);
    assert_eq!(code(&cli(&["run", &p])), 1);

    let bad = SMALL_STATIONARY.replace("\"replicas\": 3", "\"replicas\": 0");
    let p = write_spec(dir.path(), &bad);
    let o = cli(&["validate", &p]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["status"], "invalid_spec");
    let out = dir.path().join("out");
    assert_eq!(code(&cli(&["run", &p, "--out", out.to_str().unwrap()])), 1);
    assert!(!out.exists());

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&cli(&["validate", missing.to_str().unwrap()])), 1);
}

#[test]
fn runs_are_reproducible_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_spec(dir.path(), SMALL_STATIONARY);
    let read = |out: &str, seed: &str| {
        let d = dir.path().join(out);
        let o = cli(&["run", &p, "--seed", seed, "--out", d.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (
            fs::read(d.join("stationary.csv")).unwrap(),
            fs::read(d.join("stationary.json")).unwrap(),
        )
    };
    let a = read("a", "3");
    let b = read("b", "3");
    let c = read("c", "4");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
    let csv = String::from_utf8(a.0).unwrap();
    assert!(csv.starts_with("# tool: contact-lattice"));
    assert!(csv.contains("# master_seed: 3"));
    let json: serde_json::Value = serde_json::from_slice(&a.1).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["header"]["master_seed"], 3);
}

#[test]
fn oracle_check_passes() {
    let o = cli(&["oracle-check"]);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("single_site_tv_bound"));
    assert!(!table.contains(",false"));
}

#[test]
fn failed_checks_exit_three() {
    // A degraded site leaves -1 only at rate h_tilde, far slower than e^{-ht}.
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{
      "model": "B",
      "experiment": "oracle_check",
      "rates": {"model": "B", "kappa": 0.1, "kappa_tilde": 0.05, "lambda": 0.0, "h": 0.9, "h_tilde": 0.05},
      "geometry": {"kind": "torus", "width": 2, "height": 2},
      "horizon": 8.0,
      "master_seed": 1
    }"#;
    let p = write_spec(dir.path(), spec);
    let out = dir.path().join("out");
    let o = cli(&["run", &p, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("oracle_check.csv").exists());
}

#[test]
fn unwritable_output_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_spec(dir.path(), SMALL_STATIONARY);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = cli(&["run", &p, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["status"], "runtime_failure");
}
