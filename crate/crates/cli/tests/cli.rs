use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_pflab");

struct Run {
    code: i32,
    report: Option<Value>,
    raw: String,
    csv: Option<String>,
    stderr: String,
}

fn run_in(dir: &Path, cmd: &str, cfg: Option<&str>, extra: &[&str]) -> Run {
    let out = dir.join(format!("{cmd}.json"));
    let mut c = Command::new(BIN);
    c.arg(cmd).arg("--out").arg(&out).env_remove("PFLAB_THREADS");
    if let Some(cfg) = cfg {
        let p = dir.join(format!("{cmd}.config.json"));
        std::fs::write(&p, cfg).unwrap();
        c.arg("--config").arg(p);
    }
    c.args(extra);
    let o = c.output().expect("run pflab");
    let raw = std::fs::read_to_string(&out).unwrap_or_default();
    Run {
        code: o.status.code().unwrap_or(-1),
        report: serde_json::from_str(&raw).ok(),
        raw,
        csv: std::fs::read_to_string(out.with_extension("csv")).ok(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn run(cmd: &str, cfg: Option<&str>, extra: &[&str]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), cmd, cfg, extra)
}

fn check<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["diagnostics"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

fn schema_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/report-v1.schema.json")
}

/// Validates with the Python `jsonschema` package when it is installed.
fn assert_schema_valid(raw: &str) {
    let probe = Command::new("python3").args(["-c", "import jsonschema"]).output();
    if !matches!(probe, Ok(ref o) if o.status.success()) {
        eprintln!("python3 jsonschema not available; schema validation skipped");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.json");
    std::fs::write(&p, raw).unwrap();
    let script = "import json,sys,jsonschema\n\
        s=json.load(open(sys.argv[1]));r=json.load(open(sys.argv[2]))\n\
        jsonschema.Draft202012Validator.check_schema(s)\n\
        errs=list(jsonschema.Draft202012Validator(s).iter_errors(r))\n\
        [print(e.message, list(e.path)) for e in errs]\n\
        sys.exit(1 if errs else 0)";
    let o = Command::new("python3").arg("-c").arg(script).arg(schema_path()).arg(&p).output().unwrap();
    assert!(o.status.success(), "schema violations:\n{}", String::from_utf8_lossy(&o.stdout));
}

const COEFFS_SMALL: &str = r#"{"lambdas": [0.5, 1], "mc_samples": 200000, "alphas": [0.01]}"#;
const VERIFY_SMALL: &str = r#"{"random_grids": 2, "mc_samples": 100000, "kernel_points": 10, "random_pairs": 10}"#;
const SWEEP_SMALL: &str = r#"{"grids": [{"n_r": 2, "n_t": 2, "n_phi": 4}]}"#;

#[test]
fn coeffs_report_is_valid_and_thread_independent() {
    let a = run("coeffs", Some(COEFFS_SMALL), &["--threads", "1"]);
    let b = run("coeffs", Some(COEFFS_SMALL), &["--threads", "3"]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.raw, b.raw);
    assert_eq!(a.csv, b.csv);
    assert_schema_valid(&a.raw);
    let r = a.report.unwrap();
    assert_eq!(r["schema"], "pflab-report/1");
    assert!(r["metadata"]["timestamps"].is_null());
    let l = &r["results"]["lambdas"][1];
    assert_eq!(l["e1"]["route"], "closed");
    assert!(l["iee_identity_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(r["results"]["sigma"].as_array().unwrap().len(), 2);
    let csv = a.csv.unwrap();
    assert!(csv.starts_with("lambda,e1,"));
    assert!(!csv.contains('\r'));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn seed_flag_overrides_config_and_changes_mc() {
    let a = run("coeffs", Some(COEFFS_SMALL), &["--seed", "1"]);
    let b = run("coeffs", Some(COEFFS_SMALL), &["--seed", "2"]);
    let (a, b) = (a.report.unwrap(), b.report.unwrap());
    assert_eq!(a["metadata"]["seeds"]["mc"], 1);
    assert_eq!(a["metadata"]["config"]["seed"], 1);
    assert_ne!(a["results"]["lambdas"][0]["e2_mc"], b["results"]["lambdas"][0]["e2_mc"]);
    assert_eq!(a["results"]["lambdas"][0]["e2"], b["results"]["lambdas"][0]["e2"]);
}

#[test]
fn zero_cutoff_gives_all_zero_coefficients() {
    let r = run("coeffs", Some(r#"{"lambdas": [0], "mc_samples": 10000}"#), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let l = &r.report.unwrap()["results"]["lambdas"][0];
    for k in ["e1", "e1_quad", "e2", "e2_mc"] {
        assert_eq!(l[k]["value"].as_f64(), Some(0.0), "{k}");
    }
}

#[test]
fn unknown_config_key_is_rejected() {
    for cmd in ["coeffs", "fock-sweep", "binding", "verify"] {
        let r = run(cmd, Some(r#"{"no_such_key": 1}"#), &[]);
        assert_eq!(r.code, 1, "{cmd}");
        assert!(r.stderr.contains("unknown field"), "{cmd}: {}", r.stderr);
        assert!(r.report.is_none());
    }
}

#[test]
fn invalid_values_are_rejected_before_running() {
    let cases = [
        ("coeffs", r#"{"lambdas": []}"#),
        ("coeffs", r#"{"lambdas": [-1]}"#),
        ("fock-sweep", r#"{"alphas": [0.001]}"#),
        ("fock-sweep", r#"{"alphas": [0.001, 0.002, 0.004, 0.02]}"#),
        ("fock-sweep", r#"{"grids": [{"n_r": 40, "n_t": 20, "n_phi": 20}]}"#),
        ("binding", r#"{"r0": 0}"#),
        ("binding", r#"{"eps_j_min": 5, "eps_j_max": 2}"#),
        ("verify", r#"{"grid": {"n_r": 2, "n_t": 2, "n_phi": 3}}"#),
    ];
    for (cmd, cfg) in cases {
        let r = run(cmd, Some(cfg), &[]);
        assert_eq!(r.code, 1, "{cmd} {cfg}");
        assert!(r.report.is_none(), "{cmd} {cfg}");
    }
    assert_eq!(run("verify", None, &["--threads", "0"]).code, 1);
}

#[test]
fn fock_sweep_reports_fit_and_table() {
    let r = run("fock-sweep", Some(SWEEP_SMALL), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_schema_valid(&r.raw);
    let rep = r.report.unwrap();
    let g = &rep["results"]["grids"][0];
    assert_eq!(g["n_modes"], 32);
    assert_eq!(g["points"].as_array().unwrap().len(), 4);
    assert_eq!(g["fit"]["c1"]["route"], "fit");
    assert!(check(&rep, "c1_vs_e1_disc.2x2x4")["passed"].as_bool().unwrap());
    let csv = r.csv.unwrap();
    assert!(csv.starts_with("grid,n_modes,alpha,energy,residual"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn eigensolver_failure_exits_2() {
    let cfg = r#"{"grids": [{"n_r": 2, "n_t": 2, "n_phi": 4}], "max_iter": 1}"#;
    let r = run("fock-sweep", Some(cfg), &[]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    let rep = r.report.unwrap();
    assert_eq!(rep["status"], "non_convergence");
    assert_schema_valid(&r.raw);
}

#[test]
fn binding_square_well_oracle_and_no_binding_at_zero_alpha() {
    let r = run("binding", Some(r#"{"potential": "square_well", "alphas": [0, 0.01]}"#), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_schema_valid(&r.raw);
    let rep = r.report.unwrap();
    let g = rep["results"]["resonance"]["g_star"]["value"].as_f64().unwrap();
    assert!((g - std::f64::consts::PI.powi(2) / 4.0).abs() <= 1e-6);
    assert!(check(&rep, "zero_resonance.square_well_closed_form")["passed"].as_bool().unwrap());
    let scans = rep["results"]["scans"].as_array().unwrap();
    assert_eq!(scans[0]["binding"], false);
    assert!(scans[0]["best"]["margin"].as_f64().unwrap() >= 0.0);
    assert!(rep["diagnostics"]["warnings"][0].as_str().unwrap().contains("no binding"));
}

#[test]
fn binding_bump_finds_negative_margin() {
    let r = run("binding", None, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report.unwrap();
    let s = &rep["results"]["scans"][0];
    assert_eq!(s["binding"], true);
    assert!(s["best"]["margin"].as_f64().unwrap() < 0.0);
    let csv = r.csv.unwrap();
    assert!(csv.starts_with("alpha,epsilon,margin,delta"));
    assert_eq!(csv.lines().count(), 32);
}

#[test]
fn missing_resonance_bracket_exits_2() {
    let r = run("binding", Some(r#"{"g_max": 1.0}"#), &[]);
    assert_eq!(r.code, 2);
    let rep = r.report.unwrap();
    assert_eq!(rep["status"], "non_convergence");
    assert!(rep["error"].as_str().unwrap().contains("no sign change"));
}

#[test]
fn verify_passes_with_commutator_flag() {
    let r = run("verify", Some(VERIFY_SMALL), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_schema_valid(&r.raw);
    let rep = r.report.unwrap();
    assert!(rep["diagnostics"]["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert_eq!(rep["diagnostics"]["flags"][0]["name"], "commutator_constant_sign");
}

#[test]
fn negative_control_fails_epstens() {
    let r = run("verify", Some(VERIFY_SMALL), &["--negative-control"]);
    assert_eq!(r.code, 1);
    let rep = r.report.unwrap();
    assert_eq!(rep["status"], "check_failed");
    let c = check(&rep, "epstens");
    assert_eq!(c["passed"], false);
    assert!(c["value"].as_f64().unwrap() > 1e-6);
    let others = rep["diagnostics"]["checks"].as_array().unwrap().iter().filter(|c| c["name"] != "epstens");
    assert!(others.into_iter().all(|c| c["passed"] == true));
}

#[test]
fn empty_grid_is_a_vacuous_pass() {
    let r = run("verify", Some(r#"{"lambda": 0, "mc_samples": 10000, "kernel_points": 5}"#), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = r.report.unwrap();
    assert!(!rep["diagnostics"]["warnings"].as_array().unwrap().is_empty());
    assert_eq!(check(&rep, "epstens")["note"], "vacuous: empty grid");
}

#[test]
fn timestamps_are_opt_in_and_stdout_is_default() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_in(dir.path(), "binding", None, &["--timestamps"]);
    let t = &r.report.unwrap()["metadata"]["timestamps"];
    assert!(t["finished_unix"].as_f64().unwrap() >= t["started_unix"].as_f64().unwrap());
    assert_schema_valid(&r.raw);

    let o = Command::new(BIN).arg("binding").env_remove("PFLAB_THREADS").output().unwrap();
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["metadata"]["command"], "binding");
}

#[test]
fn csv_path_from_flag() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("table.csv");
    let o = Command::new(BIN)
        .args(["binding", "--csv"])
        .arg(&p)
        .env_remove("PFLAB_THREADS")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(std::fs::read_to_string(&p).unwrap().starts_with("alpha,epsilon"));
}
