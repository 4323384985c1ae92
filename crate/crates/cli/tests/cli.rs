use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ttspec"));
    c.env("RUST_LOG", "error");
    c
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn validator() -> jsonschema::Validator {
    let schema: Value = serde_json::from_str(ttspec_cli::RESULT_SCHEMA).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn assert_valid(record: &Value) {
    let v = validator();
    let errors: Vec<String> = v.iter_errors(record).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn run_writes_schema_valid_json_and_csv() {
    let out = scratch("run-lap");
    let o = exec(&["run", "--model", "laplace", "--d", "3", "--n", "4", "--b", "4", "--eps", "1e-8", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rec = read_json(&out.with_extension("json"));
    assert_valid(&rec);
    assert_eq!(rec["schema_version"], 1);
    assert_eq!(rec["eigenvalues"].as_array().unwrap().len(), 4);
    assert!(rec["verification"].is_null());

    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "state,eigenvalue,reference,abs_error,rel_error,residual");
    assert_eq!(lines.len(), 5);
    let first: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(first, rec["eigenvalues"][0].as_f64().unwrap());
}

#[test]
fn verified_records_are_schema_valid() {
    for (name, args) in [
        ("ver-closed", vec!["verify", "--model", "laplace", "--d", "3", "--n", "4", "--b", "5", "--eps", "1e-8"]),
        ("ver-dense", vec!["verify", "--model", "heisenberg", "--d", "8", "--b", "3", "--eps", "1e-8"]),
        ("ver-hh", vec!["verify", "--model", "henon-heiles", "--d", "3", "--n", "6", "--b", "2", "--eps", "1e-8"]),
    ] {
        let out = scratch(name);
        let mut args = args;
        args.extend(["--out", out.to_str().unwrap()]);
        let o = exec(&args);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stdout));
        let rec = read_json(&out.with_extension("json"));
        assert_valid(&rec);
        assert_eq!(rec["verification"]["passed"], true, "{name}");
    }
}

#[test]
fn schema_rejects_malformed_records() {
    let out = scratch("malformed");
    let o = exec(&["run", "--model", "laplace", "--d", "2", "--n", "3", "--out", out.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let good = read_json(&out.with_extension("json"));
    let v = validator();
    assert!(v.is_valid(&good));
    let mut bad = good.clone();
    bad["schema_version"] = Value::from(2);
    assert!(!v.is_valid(&bad));
    let mut bad = good.clone();
    bad.as_object_mut().unwrap().remove("eigenvalues");
    assert!(!v.is_valid(&bad));
    let mut bad = good;
    bad["config"]["model"] = Value::from("ising");
    assert!(!v.is_valid(&bad));
}

#[test]
fn fixed_seed_runs_are_identical() {
    let run = |name: &str| {
        let out = scratch(name);
        let o = exec(&[
            "run",
            "--model",
            "heisenberg",
            "--d",
            "8",
            "--b",
            "3",
            "--eps",
            "1e-6",
            "--seed",
            "7",
            "--format",
            "json",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        let mut rec = read_json(&out.with_extension("json"));
        // timings are the only fields allowed to differ
        rec["wall_time_seconds"] = Value::Null;
        for s in rec["sweep_history"].as_array_mut().unwrap() {
            s["wall_time_seconds"] = Value::Null;
        }
        rec
    };
    let a = run("seed-a");
    let b = run("seed-b");
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    // usage errors
    assert_eq!(exec(&["run", "--model", "ising", "--d", "3"]).status.code(), Some(1));
    assert_eq!(exec(&["run", "--model", "laplace"]).status.code(), Some(1));
    assert_eq!(exec(&["run", "--model", "laplace", "--d", "3", "--n", "4", "--eps", "-1"]).status.code(), Some(1));
    assert_eq!(
        exec(&["run", "--model", "heisenberg", "--d", "6", "--verify", "closed-form", "--out", scratch("x").to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(exec(&["--help"]).status.code(), Some(0));

    // not converged: one sweep with a tolerance no sweep can meet; partial
    // results are still written
    let out = scratch("noconv");
    let o = exec(&[
        "run",
        "--model",
        "heisenberg",
        "--d",
        "8",
        "--b",
        "2",
        "--eps",
        "1e-8",
        "--max-sweeps",
        "1",
        "--conv-tol",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let rec = read_json(&out.with_extension("json"));
    assert_valid(&rec);
    assert_eq!(rec["converged"], false);

    // verification failure
    let out = scratch("verfail");
    let o = exec(&[
        "verify",
        "--model",
        "laplace",
        "--d",
        "3",
        "--n",
        "4",
        "--b",
        "3",
        "--eps",
        "1e-1",
        "--max-sweeps",
        "1",
        "--tol-eig",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(read_json(&out.with_extension("json"))["verification"]["passed"], false);
}

#[test]
fn bad_thread_setting_is_a_usage_error() {
    let o = bin().env("TTSPEC_THREADS", "many").args(["run", "--model", "laplace", "--d", "2", "--n", "3"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let out = scratch("threads");
    let o = bin()
        .env("TTSPEC_THREADS", "1")
        .args(["run", "--model", "laplace", "--d", "2", "--n", "3", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn scan_keeps_going_past_failures() {
    let out = scratch("scan-b");
    let o = exec(&[
        "scan",
        "--model",
        "laplace",
        "--d",
        "2",
        "--n",
        "4",
        "--eps",
        "1e-8",
        "--axis",
        "b",
        "--values",
        "1,2,100,3",
        "--out",
        out.to_str().unwrap(),
    ]);
    // the impossible B = 100 row fails; the others still run
    assert_eq!(o.status.code(), Some(2));
    let report = read_json(&out.with_extension("json"));
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows[2]["outcome"]["error"].is_string());
    assert_eq!(rows[3]["outcome"]["eigenvalues"].as_array().unwrap().len(), 3);
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("b,100,error")).count(), 1);
    // 1 + 2 + 3 state rows, one error row, one header
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn scan_with_reference_reports_errors() {
    let out = scratch("scan-eps");
    let o = exec(&[
        "scan",
        "--model",
        "heisenberg",
        "--d",
        "6",
        "--b",
        "2",
        "--axis",
        "eps",
        "--values",
        "1e-1,1e-2",
        "--reference-eps",
        "1e-8",
        "--jobs",
        "2",
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.with_extension("json"));
    for row in report["rows"].as_array().unwrap() {
        assert_eq!(row["reference"].as_array().unwrap().len(), 2);
        assert_valid(&row["outcome"]);
    }
    assert!(!out.with_extension("csv").exists());
}
