use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_homecare"))
}

fn instance(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("homecare-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawning homecare")
}

fn error_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    serde_json::from_str(text.trim()).unwrap_or_else(|_| panic!("stderr is not JSON: {text}"))
}

#[test]
fn malformed_json_exits_with_two() {
    let dir = scratch("malformed");
    let path = dir.join("bad.json");
    fs::write(&path, "{\"geometry\": ").unwrap();
    let out = run(&["validate", "--instance", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "document");
}

#[test]
fn schema_errors_are_all_listed() {
    let dir = scratch("schema");
    let path = dir.join("bad.json");
    fs::write(&path, r#"{"geometry": {"shape": "line"}, "colour": 1}"#).unwrap();
    let out = run(&["validate", "--instance", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let errors = error_json(&out)["error"]["errors"].as_array().unwrap().len();
    assert_eq!(errors, 4, "three missing fields and one unknown");
}

#[test]
fn validate_prints_a_summary() {
    let out = run(&["validate", "--instance", instance("grid-2x3.json").to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["regions"], 6);
    assert_eq!(v["valid"], true);
}

#[test]
fn simulation_reports_are_byte_identical_on_rerun() {
    let inst = instance("grid-2x3.json");
    let dir = scratch("rerun");
    let mut csv = Vec::new();
    for (n, jobs) in ["1", "2"].iter().enumerate() {
        let out_dir = dir.join(n.to_string());
        let out = run(&[
            "compare", "--instance", inst.to_str().unwrap(), "--policies", "alp,myopic", "--ref", "myopic",
            "--states", "3", "--days", "30", "--seed", "11", "--jobs", jobs, "--out", out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csv.push(fs::read(out_dir.join("report.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
}

#[test]
fn manifest_lists_every_artifact_with_its_hash() {
    let dir = scratch("manifest");
    let out = run(&["solve-alp", "--instance", instance("grid-2x3.json").to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let m: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "solve-alp");
    assert_eq!(m["config"]["alp"]["variant"], "1d-2i");
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for a in outputs {
        assert_eq!(a["sha256"].as_str().unwrap().len(), 64);
        assert!(dir.join(a["path"].as_str().unwrap()).exists());
    }
    assert!(fs::read_to_string(dir.join("report.md")).unwrap().contains("manifest.json"));
}

#[test]
fn stored_parameters_drive_the_policy() {
    let inst = instance("grid-2x3.json");
    let dir = scratch("params");
    assert!(run(&["solve-alp", "--instance", inst.to_str().unwrap(), "--out", dir.to_str().unwrap()]).status.success());
    let params = dir.join("params.json");
    let out_dir = dir.join("classify");
    let out = run(&[
        "classify", "--instance", inst.to_str().unwrap(), "--params", params.to_str().unwrap(), "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn bound_never_reports_a_crossing() {
    let dir = scratch("bound");
    let out = run(&[
        "bound", "--instance", instance("bound-2x3.json").to_str().unwrap(), "--policies", "myopic",
        "--states", "2", "--paths", "4", "--out", dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("report.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[3] <= f[4] + 1e-6 * f[4].max(1.0));
    }
}

#[test]
fn closed_form_rejects_general_instances() {
    let dir = scratch("closed");
    let path = dir.join("two-types.json");
    fs::write(
        &path,
        r#"{"geometry": {"shape": "line", "depot_distances": [0.1, 0.2]},
            "services": [{"h": 1, "e": 1, "T": 2, "dist": {"kind": "deterministic", "mean": 3}},
                         {"h": 2, "e": 0.5, "T": 1, "dist": {"kind": "deterministic", "mean": 2}}],
            "arrivals": {"mode": "fixed", "target_daily_demand_h": 4},
            "shift": {"chi": 6}}"#,
    )
    .unwrap();
    let out = run(&["closed-form", "--instance", path.to_str().unwrap(), "--out", dir.join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "precondition");
}
