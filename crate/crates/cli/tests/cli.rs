use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

use rperim_core::grid::{ExtensionRule, GridGeometry};
use rperim_core::io::{read_mask, write_mask};
use rperim_core::raster::{rasterize, Shape};

fn rperim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rperim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}\nstdout: {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn disk_mask(dir: &Path) -> String {
    let g = GridGeometry::centered(2, 1.5, 1.0 / 64.0).unwrap();
    let m = rasterize(&Shape::ball(&[0.0, 0.0], 1.0), &g).unwrap();
    let path = dir.join("disk.pbm");
    write_mask(&path, &m).unwrap();
    path.to_str().unwrap().to_owned()
}

fn write_spec(dir: &Path, v: &Value) -> String {
    let path = dir.join("spec.json");
    std::fs::write(&path, v.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn perimeter_of_a_disk_is_near_its_length() {
    let dir = tempfile::tempdir().unwrap();
    let mask = disk_mask(dir.path());
    let out = rperim(&["perimeter", "--mask", &mask, "--r", "0.25"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let per = v["per_r"].as_f64().unwrap();
    assert!((per / (2.0 * std::f64::consts::PI) - 1.0).abs() < 0.05, "{per}");
    assert!(v["oscillation_cells"].as_u64().unwrap() > 0);
}

#[test]
fn nonpositive_radius_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let mask = disk_mask(dir.path());
    for bad in ["-1", "0", "nan"] {
        let out = rperim(&["perimeter", "--mask", &mask, "--r", bad]);
        assert_eq!(out.status.code(), Some(2), "r = {bad}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("> 0"), "r = {bad}");
    }
}

#[test]
fn missing_mask_exits_with_usage_error() {
    let out = rperim(&["perimeter", "--mask", "/nonexistent/m.pbm", "--r", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn convert_roundtrips_mask_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mask = disk_mask(dir.path());
    let csv = dir.path().join("disk.csv");
    let back = dir.path().join("back.pbm");
    let out = rperim(&["convert", "--input", &mask, "--output", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = rperim(&[
        "convert",
        "--input",
        csv.to_str().unwrap(),
        "--output",
        back.to_str().unwrap(),
        "--level",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let a = read_mask(Path::new(&mask)).unwrap();
    let b = read_mask(&back).unwrap();
    assert_eq!(a.bits(), b.bits());
}

#[test]
fn solve_writes_minimizer_and_result() {
    let dir = tempfile::tempdir().unwrap();
    let g = GridGeometry::centered(2, 1.0, 1.0 / 16.0).unwrap();
    let boundary = rasterize(&Shape::ball(&[0.0, 0.0], 0.6), &g).unwrap();
    write_mask(&dir.path().join("b.pbm"), &boundary).unwrap();
    let spec = write_spec(dir.path(), &json!({"boundary": "b.pbm", "forcing": 2.0, "r": 0.125}));
    let out_dir = dir.path().join("out");
    let out = rperim(&["solve", "--spec", &spec, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["scaled_energy"].as_i64(), Some(v["flow_value"].as_i64().unwrap() + v["offset"].as_i64().unwrap()));
    let m = read_mask(&out_dir.join("minimizer.pbm")).unwrap();
    assert!(m.is_subset_of(&boundary).unwrap());
    assert_eq!(v["cells"].as_u64(), Some(m.count() as u64));
    assert!(out_dir.join("result.json").is_file());
}

#[test]
fn solve_rejects_an_incomplete_problem() {
    let dir = tempfile::tempdir().unwrap();
    let g = GridGeometry::centered(2, 1.0, 0.25).unwrap();
    let b = rasterize(&Shape::ball(&[0.0, 0.0], 0.5), &g)
        .unwrap()
        .with_extension(ExtensionRule::ConstantOutside)
        .unwrap();
    write_mask(&dir.path().join("b.pbm"), &b).unwrap();
    let spec = write_spec(dir.path(), &json!({"boundary": "b.pbm"}));
    let out = rperim(&["solve", "--spec", &spec]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn planelike_writes_mask_census_and_width() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("pl");
    let out = rperim(&[
        "planelike", "--omega", "1,2", "--M", "2", "--r", "0.5", "--eta", "0.05", "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    for key in ["sandwich_ok", "periodic_ok", "birkhoff_ok", "layers_ordered"] {
        assert_eq!(v[key], json!(true), "{key}");
    }
    assert!(v["slab_width"].as_f64().unwrap() <= 2.0);
    for f in ["mask.pbm", "mask.pbm.json", "census.json", "width.json"] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }
}

#[test]
fn planelike_rejects_out_of_range_parameters() {
    for args in [
        ["--omega", "0,1", "--eta", "0.3"],
        ["--omega", "0,1", "--M", "1"],
        ["--omega", "0,0", "--M", "2"],
    ] {
        let mut full = vec!["planelike"];
        full.extend(args);
        assert_eq!(rperim(&full).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn print_config_applies_flag_overrides() {
    let out = rperim(&["experiment", "oned", "--seed", "99", "--print-config"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["seed"], json!(99));
    assert_eq!(v["max_free"], json!(20));
}

#[test]
fn spec_file_is_merged_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &json!({"seed": 1, "random_instances": 3}));
    let out = rperim(&["experiment", "oned", "--spec", &spec, "--seed", "7", "--print-config"]);
    let v = stdout_json(&out);
    assert_eq!(v["seed"], json!(7));
    assert_eq!(v["random_instances"], json!(3));
}

#[test]
fn unknown_experiment_and_inapplicable_flag_are_usage_errors() {
    assert_eq!(rperim(&["experiment", "nope"]).status.code(), Some(2));
    assert_eq!(rperim(&["experiment", "oned", "--eta", "0.1"]).status.code(), Some(2));
}

#[test]
fn experiment_writes_report_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &json!({"max_free": 8, "random_instances": 4}));
    let out_dir = dir.path().join("rep");
    let out = rperim(&["experiment", "oned", "--spec", &spec, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!(v["verdicts"].as_array().unwrap().iter().all(|x| x["passed"] == json!(true)));
    assert!(out_dir.join("oned_classification.json").is_file());
    assert!(out_dir.join("oned_classification.csv").is_file());
}

#[test]
fn failed_verdict_exits_three() {
    // the coarsest radius alone cannot reach a 0.01% perimeter error
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &json!({"radii": [0.4], "h_ratio": 8.0, "final_tolerance": 0.0001}));
    let out = rperim(&["experiment", "gamma", "--spec", &spec]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

#[test]
fn selftest_is_deterministic() {
    let a = rperim(&["selftest", "--seed", "3", "--jobs", "2"]);
    let b = rperim(&["selftest", "--seed", "3", "--jobs", "1"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
}
