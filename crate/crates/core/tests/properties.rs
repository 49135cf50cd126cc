use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rperim_core::energy::{energy, perimeter_r, submodularity_slack_counts};
use rperim_core::experiments::selftest::{compare_with_oracle, random_small_spec};
use rperim_core::grid::{BinaryMask, Bits, ExtensionRule, FieldExtension, GridGeometry, ScalarField, Window};
use rperim_core::mincut::{solve, Canonical};
use rperim_core::morphology::{dilate, dilate_by_stencil, erode};
use rperim_core::planelike::{construct_planelike, rational_basis, PeriodicForcing, StripSpec};
use rperim_core::stencil::ball_stencil;

const SIDE: usize = 12;

fn geometry(periodic: bool) -> GridGeometry {
    let g = GridGeometry::new(&[SIDE, SIDE], 1.0 / SIDE as f64, &[0.0, 0.0]).unwrap();
    if periodic {
        g.with_periodic(&[true, true]).unwrap()
    } else {
        g
    }
}

fn extension() -> impl Strategy<Value = ExtensionRule> {
    prop_oneof![Just(ExtensionRule::ConstantOutside), Just(ExtensionRule::ConstantInside)]
}

fn cells() -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(prop::bool::weighted(0.4), SIDE * SIDE)
}

fn mask(g: &GridGeometry, bits: &[bool], ext: ExtensionRule) -> BinaryMask {
    BinaryMask::from_bools(g, bits, ext).unwrap()
}

/// Radii between one and four cells, including non-integer ones.
fn radius() -> impl Strategy<Value = f64> {
    (4usize..=16).prop_map(|q| q as f64 * 0.25 / SIDE as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stencil_is_symmetric_and_nested(q in 1usize..=24, dim in 1usize..=3) {
        let h = 0.1;
        let r = q as f64 * 0.25 * h;
        let s = ball_stencil(r, h, dim).unwrap();
        for k in s.offsets() {
            let neg = [-k[0], -k[1], -k[2]];
            prop_assert!(s.contains(&neg));
            let d2: i64 = k.iter().map(|c| c * c).sum();
            prop_assert!(d2 as f64 * h * h <= r * r * (1.0 + 1e-12));
        }
        let bigger = ball_stencil(r + 0.25 * h, h, dim).unwrap();
        prop_assert!(bigger.cardinality() >= s.cardinality());
        prop_assert!(s.offsets().iter().all(|k| bigger.contains(k)));
    }

    #[test]
    fn dilation_matches_stencil_scan(bits in cells(), ext in extension(), r in radius(), periodic: bool) {
        let m = mask(&geometry(periodic), &bits, ext);
        let (a, b) = (dilate(&m, r).unwrap(), dilate_by_stencil(&m, r).unwrap());
        prop_assert_eq!(a.bits(), b.bits());
    }

    #[test]
    fn erosion_is_dual_and_sandwiches(bits in cells(), ext in extension(), r in radius()) {
        let m = mask(&geometry(false), &bits, ext);
        let e = erode(&m, r).unwrap();
        let d = dilate(&m, r).unwrap();
        let dual = dilate(&m.complement(), r).unwrap().complement();
        prop_assert_eq!(e.bits(), dual.bits());
        prop_assert!(e.is_subset_of(&m).unwrap());
        prop_assert!(m.is_subset_of(&d).unwrap());
    }

    #[test]
    fn dilation_is_monotone(a in cells(), b in cells(), r in radius()) {
        let g = geometry(false);
        let small = mask(&g, &a, ExtensionRule::ConstantOutside);
        let large = small.union(&mask(&g, &b, ExtensionRule::ConstantOutside)).unwrap();
        prop_assert!(dilate(&small, r).unwrap().is_subset_of(&dilate(&large, r).unwrap()).unwrap());
    }

    #[test]
    fn perimeter_is_complement_symmetric(bits in cells(), ext in extension(), r in radius()) {
        let m = mask(&geometry(false), &bits, ext);
        let w = Window::full(m.geometry());
        let p = perimeter_r(&m, &w, r).unwrap();
        prop_assert!(p >= 0.0);
        prop_assert_eq!(p, perimeter_r(&m.complement(), &w, r).unwrap());
    }

    #[test]
    fn perimeter_is_translation_invariant_on_the_torus(
        bits in cells(), r in radius(), dx in -20i64..20, dy in -20i64..20,
    ) {
        let m = mask(&geometry(true), &bits, ExtensionRule::ConstantOutside);
        let w = Window::full(m.geometry());
        let moved = m.translate(&[dx, dy, 0]);
        prop_assert_eq!(m.count(), moved.count());
        prop_assert_eq!(perimeter_r(&m, &w, r).unwrap(), perimeter_r(&moved, &w, r).unwrap());
    }

    #[test]
    fn perimeter_is_submodular(a in cells(), b in cells(), ext in extension(), r in radius()) {
        let g = geometry(false);
        let ma = mask(&g, &a, ext.clone());
        let mb = mask(&g, &b, ext);
        prop_assert!(submodularity_slack_counts(&ma, &mb, &Window::full(&g), r).unwrap() >= 0);
    }

    #[test]
    fn constant_sets_have_no_perimeter(r in radius()) {
        let g = geometry(false);
        let w = Window::full(&g);
        let full = BinaryMask::full(&g, ExtensionRule::ConstantInside).unwrap();
        let empty = BinaryMask::empty(&g, ExtensionRule::ConstantOutside).unwrap();
        prop_assert_eq!(perimeter_r(&full, &w, r).unwrap(), 0.0);
        prop_assert_eq!(perimeter_r(&empty, &w, r).unwrap(), 0.0);
    }

    #[test]
    fn energy_is_perimeter_plus_bulk(bits in cells(), r in radius(), c in -3i32..=3) {
        let g = geometry(false);
        let m = mask(&g, &bits, ExtensionRule::ConstantOutside);
        let w = Window::full(&g);
        let field = ScalarField::new(&g, vec![c as f64; g.len()], FieldExtension::Zero).unwrap();
        let e = energy(&m, &field, &w, r).unwrap();
        let bulk = c as f64 * m.count() as f64 * g.cell_volume();
        prop_assert!((e.perimeter_term - perimeter_r(&m, &w, r).unwrap()).abs() < 1e-12);
        prop_assert!((e.bulk_term - bulk).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_agrees_with_enumeration(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_small_spec(&mut rng, 12).unwrap();
        let c = compare_with_oracle(&spec).unwrap();
        prop_assert!(c.ok(), "{:?}", c);
    }

    #[test]
    fn minimal_minimizer_lies_below_maximal(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_small_spec(&mut rng, 16).unwrap();
        let lo = solve(&spec, Canonical::Minimal).unwrap();
        let hi = solve(&spec, Canonical::Maximal).unwrap();
        prop_assert!(lo.mask.is_subset_of(&hi.mask).unwrap());
        prop_assert_eq!(lo.scaled_energy, hi.scaled_energy);
        // outside the free cells both keep the boundary data
        let free: &Bits = spec.free();
        for l in 0..spec.geometry().len() {
            if !free[l] {
                prop_assert_eq!(lo.mask.get(l), spec.boundary().get(l));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn planelike_outputs_are_ordered(
        omega in prop::sample::select(vec![[0i64, 1], [1, 0], [1, 1], [1, -1], [1, 2], [2, 1]]),
        r in prop::sample::select(vec![0.5, 1.0]),
        eta in prop::sample::select(vec![0.0, 0.05, 0.2]),
    ) {
        let dir = rational_basis(&omega).unwrap();
        let spec = StripSpec::new(dir, 2.0, r, r / 5.0, PeriodicForcing::Checkerboard { eta }, eta).unwrap();
        let out = construct_planelike(&spec).unwrap();
        prop_assert!(out.sandwich_ok);
        prop_assert!(out.periodic_ok);
        prop_assert!(out.birkhoff_ok);
        prop_assert!(out.layers_ordered);
        prop_assert!(out.colors_monotone);
        prop_assert!(out.census.identities_hold());
        prop_assert!(out.slab_width <= 2.0);
    }
}
