use serde_json::json;

use rperim_core::energy::perimeter_r;
use rperim_core::experiments::{default_config, run_named, EXPERIMENTS};
use rperim_core::grid::{BinaryMask, ExtensionRule, FieldExtension, GridGeometry, ScalarField, Window};
use rperim_core::io::{read_field, read_mask, sidecar_path, write_field, write_mask};
use rperim_core::mincut::{solve, Canonical, DirichletSpec};
use rperim_core::morphology::erode;
use rperim_core::raster::{rasterize, Shape};

#[test]
fn mask_survives_disk_roundtrip_with_its_exterior() {
    let dir = tempfile::tempdir().unwrap();
    let g = GridGeometry::new(&[13, 7, 3], 0.25, &[-1.0, 0.0, 0.5]).unwrap();
    let m = rasterize(&Shape::ball(&[0.5, 0.9, 0.8], 0.9), &g)
        .unwrap()
        .with_extension(ExtensionRule::half_space(&[1, 0, 0], 0.3).unwrap())
        .unwrap();
    let path = dir.path().join("m.pbm");
    write_mask(&path, &m).unwrap();
    assert!(sidecar_path(&path).exists());
    let back = read_mask(&path).unwrap();
    assert_eq!(back, m);
    let w = Window::full(&g);
    assert_eq!(perimeter_r(&back, &w, 0.5).unwrap(), perimeter_r(&m, &w, 0.5).unwrap());
}

#[test]
fn field_survives_disk_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let g = GridGeometry::new(&[6, 4], 0.5, &[0.0, 0.0]).unwrap();
    let f = ScalarField::from_fn(&g, FieldExtension::Zero, |x| x[0] * 3.0 - x[1] / 7.0).unwrap();
    let path = dir.path().join("g.csv");
    write_field(&path, &f).unwrap();
    let back = read_field(&path).unwrap();
    assert_eq!(back.values(), f.values());
}

#[test]
fn truncated_pbm_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.pbm");
    std::fs::write(&path, b"P4\n16 16\n\x00\x00").unwrap();
    assert!(read_mask(&path).is_err());
}

#[test]
fn solved_disk_problem_keeps_boundary_and_lowers_energy() {
    // boundary data is a disk, forcing pushes cells out: the minimizer shrinks
    let g = GridGeometry::centered(2, 1.0, 1.0 / 16.0).unwrap();
    let disk = rasterize(&Shape::ball(&[0.0, 0.0], 0.6), &g).unwrap();
    let r = 0.125;
    let free = erode(&BinaryMask::full(&g, ExtensionRule::ConstantOutside).unwrap(), r).unwrap();
    let forcing = ScalarField::new(&g, vec![1.0; g.len()], FieldExtension::Zero).unwrap();
    let spec = DirichletSpec::new(Window::full(&g), free.bits().clone(), disk.clone(), forcing, r).unwrap();
    let out = solve(&spec, Canonical::Minimal).unwrap();
    assert!(out.mask.is_subset_of(&disk).unwrap());
    assert!(out.scaled_energy <= spec.scaled_energy(&disk).unwrap());
    assert_eq!(out.scaled_energy, out.flow_value as i128 + out.offset);
}

#[test]
fn every_experiment_has_a_loadable_default() {
    for name in EXPERIMENTS {
        let cfg = default_config(name).unwrap();
        assert!(cfg.is_object(), "{name}");
    }
    assert!(default_config("nope").is_err());
}

#[test]
fn missing_config_key_is_an_error() {
    let mut cfg = default_config("oned").unwrap();
    cfg.as_object_mut().unwrap().remove("seed");
    assert!(run_named("oned", cfg, 1).is_err());
}

#[test]
fn reports_are_reproducible_across_thread_counts() {
    let mut cfg = default_config("selftest").unwrap();
    for (k, v) in [("solver_instances", 6), ("coarea_fields", 4), ("submodular_pairs", 12), ("max_free", 10)] {
        cfg[k] = json!(v);
    }
    let one = run_named("selftest", cfg.clone(), 1).unwrap();
    let four = run_named("selftest", cfg, 4).unwrap();
    assert!(one.passed());
    assert_eq!(one.to_json().unwrap(), four.to_json().unwrap());
    assert_eq!(one.samples_csv().unwrap(), four.samples_csv().unwrap());

    let dir = tempfile::tempdir().unwrap();
    let path = one.write(dir.path()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["name"], "selftest");
    assert!(dir.path().join("selftest.csv").exists());
}

#[test]
fn oned_experiment_passes_on_a_short_run() {
    let mut cfg = default_config("oned").unwrap();
    cfg["max_free"] = json!(8);
    cfg["random_instances"] = json!(5);
    let report = run_named("oned", cfg, 1).unwrap();
    assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
}
