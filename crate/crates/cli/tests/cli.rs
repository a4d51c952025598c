//! Exit codes, error paths and seed handling of the `hoisynth` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("manifests");
    for entry in std::fs::read_dir(shipped).unwrap() {
        let entry = entry.unwrap();
        std::fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
    }
    dir
}

fn run(cmd: &str, manifest: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hoisynth"))
        .args([cmd, "--quiet", "--manifest"])
        .arg(manifest)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn edit_json(path: &Path, f: impl FnOnce(&mut Value)) {
    let mut v: Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    f(&mut v);
    std::fs::write(path, serde_json::to_vec(&v).unwrap()).unwrap();
}

fn synth_lift(dir: &Path) {
    let o = run("synth", &dir.join("synth.json"), dir, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

fn file_count(dir: &Path) -> usize {
    std::fs::read_dir(dir).map(|d| d.count()).unwrap_or(0)
}

#[test]
fn malformed_manifest_is_a_parse_error() {
    let dir = workspace();
    std::fs::write(dir.path().join("synth.json"), "{ \"schema_version\": 1, ").unwrap();
    let out = dir.path().join("out");
    let o = run("synth", &dir.path().join("synth.json"), &out, &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));
    assert_eq!(file_count(&out), 0);
}

#[test]
fn missing_manifest_is_an_io_error() {
    let dir = workspace();
    let o = run("simulate", &dir.path().join("nope.json"), dir.path(), &[]);
    assert_eq!(code(&o), 5);
}

#[test]
fn unsupported_schema_version_is_rejected() {
    let dir = workspace();
    edit_json(&dir.path().join("simulate.json"), |v| v["schema_version"] = 2.into());
    let o = run("simulate", &dir.path().join("simulate.json"), dir.path(), &[]);
    assert_eq!(code(&o), 3);
}

#[test]
fn unknown_manifest_field_is_a_parse_error() {
    let dir = workspace();
    edit_json(&dir.path().join("solve_v0.json"), |v| v["flight_tme"] = 1.0.into());
    let o = run("solve-v0", &dir.path().join("solve_v0.json"), dir.path(), &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn reversed_contact_phase_is_a_validation_error() {
    let dir = workspace();
    edit_json(&dir.path().join("synth.json"), |v| {
        v["config"]["phases"]["t_s"] = 50.into();
        v["config"]["phases"]["t_e"] = 20.into();
    });
    let out = dir.path().join("out");
    let o = run("synth", &dir.path().join("synth.json"), &out, &[]);
    assert_eq!(code(&o), 3);
    assert_eq!(file_count(&out), 0);
}

#[test]
fn rollout_missing_fields_is_a_parse_error_and_writes_nothing() {
    let dir = workspace();
    synth_lift(dir.path());
    edit_json(&dir.path().join("rollout.json"), |v| {
        v["frames"][3].as_object_mut().unwrap().remove("dof_pos");
    });
    let out = dir.path().join("out");
    let o = run("score", &dir.path().join("score.json"), &out, &[]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rollout.json"));
    assert_eq!(file_count(&out), 0);
}

#[test]
fn grasp_check_needs_exactly_one_source() {
    let dir = workspace();
    let clip = dir.path().join("grasp_check_clip.json");
    let contacts = dir.path().join("grasp_check.json");
    let set: Value = serde_json::from_slice(&std::fs::read(&contacts).unwrap()).unwrap();
    edit_json(&clip, |v| v["contacts"] = set["contacts"].clone());
    let o = run("grasp-check", &clip, dir.path(), &[]);
    assert_eq!(code(&o), 3);
}

#[test]
fn reverse_simulation_into_the_ground_is_a_numerical_error() {
    let dir = workspace();
    edit_json(&dir.path().join("simulate.json"), |v| {
        v["direction"] = "reverse".into();
        v["initial"]["pose"]["p"] = serde_json::json!([0.0, 0.0, 0.05]);
        v["initial"]["lin_vel"] = serde_json::json!([0.0, 0.0, 5.0]);
    });
    let o = run("simulate", &dir.path().join("simulate.json"), dir.path(), &[]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

fn strip_provenance(path: &Path) -> Value {
    let mut v: Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("provenance");
    v
}

#[test]
fn zero_range_augmentation_reproduces_the_parent() {
    let dir = workspace();
    synth_lift(dir.path());
    let manifest = dir.path().join("augment_50.json");
    edit_json(&manifest, |v| {
        v["n"] = 3.into();
        v["config"] = serde_json::json!({});
    });
    let out = dir.path().join("out");
    assert_eq!(code(&run("augment", &manifest, &out, &[])), 0);
    let parent = strip_provenance(&dir.path().join("lift.json"));
    for i in 0..3 {
        assert_eq!(strip_provenance(&out.join(format!("lift_aug_{i}.json"))), parent, "clip {i}");
    }
}

#[test]
fn seed_flag_overrides_the_manifest_seed() {
    let dir = workspace();
    synth_lift(dir.path());
    let manifest = dir.path().join("augment_50.json");
    edit_json(&manifest, |v| v["n"] = 2.into());
    let read = |out: &str| std::fs::read(dir.path().join(out).join("lift_aug_1.json")).unwrap();
    assert_eq!(code(&run("augment", &manifest, &dir.path().join("a"), &["--seed", "5"])), 0);
    assert_eq!(code(&run("augment", &manifest, &dir.path().join("b"), &["--seed", "5"])), 0);
    assert_eq!(code(&run("augment", &manifest, &dir.path().join("c"), &[])), 0);
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
    let index: Value = serde_json::from_slice(&std::fs::read(dir.path().join("a/index.json")).unwrap()).unwrap();
    assert_eq!(index["seed"], 5);
}

#[test]
fn estimate_force_recovers_the_logged_elbow_load() {
    let dir = workspace();
    let out = dir.path().join("out");
    assert_eq!(code(&run("estimate-force", &dir.path().join("estimate_force.json"), &out, &[])), 0);
    let text = std::fs::read_to_string(out.join("tau_ext.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,tau_ext_0,tau_ext_1"));
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols[1].abs() < 1e-9 && (cols[2] - 0.5).abs() < 1e-9, "{line}");
    }
}
