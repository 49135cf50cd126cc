//! Internal consistency suite: the graph solver against exhaustive
//! enumeration, the level-set decomposition of the oscillation integral, and
//! submodularity of `Per_r` on random pairs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{derive_seeds, parallel_map, Report, Verdict};
use crate::energy::{coarea_check, submodularity_slack_counts};
use crate::error::Result;
use crate::grid::{BinaryMask, Bits, ExtensionRule, FieldExtension, GridGeometry, ScalarField, Window};
use crate::mincut::{brute_force, solve, Canonical, DirichletSpec};
use crate::morphology::erode;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestConfig {
    pub solver_instances: usize,
    pub max_free: usize,
    pub coarea_fields: usize,
    pub coarea_side: usize,
    pub max_levels: usize,
    pub submodular_pairs: usize,
    pub submodular_side: usize,
    pub seed: u64,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            solver_instances: 50,
            max_free: 16,
            coarea_fields: 100,
            coarea_side: 32,
            max_levels: 8,
            submodular_pairs: 1000,
            submodular_side: 24,
            seed: 6,
        }
    }
}

fn random_extension(rng: &mut impl Rng) -> ExtensionRule {
    if rng.gen_bool(0.5) {
        ExtensionRule::ConstantOutside
    } else {
        ExtensionRule::ConstantInside
    }
}

/// A small Dirichlet problem on a unit-spacing box in two or three
/// dimensions with at most `max_free` free cells. Forcing values come from a
/// short list of multiples of `1/(2r)` so that ties, and with them several
/// minimizers, are common.
pub fn random_small_spec(rng: &mut impl Rng, max_free: usize) -> Result<DirichletSpec> {
    let dim = if rng.gen_bool(0.8) { 2 } else { 3 };
    let r: f64 = *[1.0, 1.5, 2.0].choose(rng).expect("nonempty");
    let reach = r.floor() as usize;
    let shape: Vec<usize> = (0..dim).map(|_| 2 * reach + rng.gen_range(2..=4)).collect();
    let g = GridGeometry::new(&shape, 1.0, &vec![0.0; dim])?;
    let window = Window::full(&g);
    let omega = BinaryMask::full(&g, ExtensionRule::ConstantOutside)?;
    let core = erode(&omega, r)?;
    let mut candidates: Vec<usize> = (0..g.len()).filter(|&l| core.get(l)).collect();
    candidates.shuffle(rng);
    let k = rng.gen_range(1..=max_free.min(candidates.len()));
    let mut free = Bits::repeat(false, g.len());
    for &l in &candidates[..k] {
        free.set(l, true);
    }
    let p = rng.gen_range(0.2..0.8);
    let bits: Bits = (0..g.len()).map(|_| rng.gen_bool(p)).collect();
    let boundary = BinaryMask::from_bits(&g, bits, random_extension(rng))?;
    let unit = 1.0 / (2.0 * r);
    let values: Vec<f64> = (0..g.len())
        .map(|_| *[-2.0, -1.0, 0.0, 0.0, 1.0, 2.0].choose(rng).expect("nonempty") * unit)
        .collect();
    let field = ScalarField::new(&g, values, FieldExtension::Zero)?;
    DirichletSpec::new(window, free, boundary, field, r)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleComparison {
    pub free: usize,
    pub minimizers: usize,
    pub energy_match: bool,
    pub minimal_match: bool,
    pub maximal_match: bool,
}

impl OracleComparison {
    pub fn ok(&self) -> bool {
        self.energy_match && self.minimal_match && self.maximal_match
    }
}

/// Solves `spec` both ways and enumerates it; labelings are compared bitwise.
pub fn compare_with_oracle(spec: &DirichletSpec) -> Result<OracleComparison> {
    let bf = brute_force(spec)?;
    let lo = solve(spec, Canonical::Minimal)?;
    let hi = solve(spec, Canonical::Maximal)?;
    let label = |m: &BinaryMask| {
        bf.free
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, &l)| acc | ((m.get(l) as u32) << i))
    };
    Ok(OracleComparison {
        free: bf.free.len(),
        minimizers: bf.minimizers.len(),
        energy_match: lo.scaled_energy == bf.min_scaled && hi.scaled_energy == bf.min_scaled,
        minimal_match: label(&lo.mask) == bf.bottom(),
        maximal_match: label(&hi.mask) == bf.top(),
    })
}

/// Piecewise-constant field on a square grid: nearest of a few random sites,
/// each carrying one of `levels` values.
pub fn random_level_field(side: usize, levels: usize, rng: &mut impl Rng) -> Result<ScalarField> {
    let h = 1.0 / side as f64;
    let ext = if rng.gen_bool(0.5) {
        FieldExtension::Zero
    } else {
        FieldExtension::Periodic
    };
    let g = GridGeometry::new(&[side, side], h, &[0.0, 0.0])?;
    let g = if ext == FieldExtension::Periodic {
        g.with_periodic(&[true, true])?
    } else {
        g
    };
    let values: Vec<f64> = (0..levels).map(|_| rng.gen_range(-4i32..=4) as f64 * 0.25).collect();
    let sites: Vec<([f64; 2], f64)> = (0..rng.gen_range(2..=12))
        .map(|_| ([rng.gen(), rng.gen()], values[rng.gen_range(0..levels)]))
        .collect();
    ScalarField::from_fn(&g, ext, |x| {
        sites
            .iter()
            .min_by(|a, b| {
                let da = (x[0] - a.0[0]).powi(2) + (x[1] - a.0[1]).powi(2);
                let db = (x[0] - b.0[0]).powi(2) + (x[1] - b.0[1]).powi(2);
                da.total_cmp(&db)
            })
            .map(|s| s.1)
            .unwrap_or(0.0)
    })
}

pub fn random_mask(g: &GridGeometry, ext: ExtensionRule, rng: &mut impl Rng) -> Result<BinaryMask> {
    // a union of a few disks with salt noise
    let disks: Vec<([f64; 2], f64)> = (0..rng.gen_range(1..=4))
        .map(|_| ([rng.gen(), rng.gen()], rng.gen_range(0.05..0.35)))
        .collect();
    let noise = rng.gen_range(0.0..0.2);
    let flips: Vec<bool> = (0..g.len()).map(|_| rng.gen_bool(noise)).collect();
    let mut m = BinaryMask::from_predicate(g, ext, |x| {
        disks
            .iter()
            .any(|(c, rad)| (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) <= rad * rad)
    })?;
    for (l, &f) in flips.iter().enumerate() {
        if f {
            let v = m.get(l);
            m.set(l, !v);
        }
    }
    Ok(m)
}

pub fn run_selftest(cfg: &SelftestConfig, jobs: usize) -> Result<Report> {
    let mut report = Report::new("selftest", cfg, cfg.seed)?;
    let seeds = derive_seeds(cfg.seed, 3);

    let solver_seeds = derive_seeds(seeds[0], cfg.solver_instances);
    let oracle = parallel_map(jobs, cfg.solver_instances, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(solver_seeds[i]);
        compare_with_oracle(&random_small_spec(&mut rng, cfg.max_free)?)
    })?;
    let multi = oracle.iter().filter(|c| c.minimizers > 1).count();
    for (i, c) in oracle.iter().enumerate() {
        report.sample(json!({"suite": "oracle", "index": i, "result": c}))?;
    }

    let coarea_seeds = derive_seeds(seeds[1], cfg.coarea_fields);
    let coarea = parallel_map(jobs, cfg.coarea_fields, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(coarea_seeds[i]);
        let levels = rng.gen_range(1..=cfg.max_levels);
        let u = random_level_field(cfg.coarea_side, levels, &mut rng)?;
        let mult = [1.0, 2.0, 4.0][i % 3];
        let r = mult * u.geometry().spacing();
        let c = coarea_check(&u, &Window::full(u.geometry()), r)?;
        Ok((r, c))
    })?;
    for (i, (r, c)) in coarea.iter().enumerate() {
        report.sample(json!({"suite": "coarea", "index": i, "r": r, "levels": c.levels, "exact": c.exact()}))?;
    }

    let sub_seeds = derive_seeds(seeds[2], cfg.submodular_pairs);
    let side = cfg.submodular_side;
    let sub = parallel_map(jobs, cfg.submodular_pairs, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seeds[i]);
        let g = GridGeometry::new(&[side, side], 1.0 / side as f64, &[0.0, 0.0])?;
        let ext = random_extension(&mut rng);
        let a = random_mask(&g, ext.clone(), &mut rng)?;
        let b = random_mask(&g, ext, &mut rng)?;
        let r = [1.0, 2.5, 4.0][i % 3] * g.spacing();
        submodularity_slack_counts(&a, &b, &Window::full(&g), r)
    })?;
    let min_slack = sub.iter().copied().min().unwrap_or(0);

    let oracle_fail = oracle.iter().filter(|c| !c.ok()).count();
    let coarea_fail = coarea.iter().filter(|(_, c)| !c.exact()).count();
    report.summarize("oracle_instances_with_ties", multi)?;
    report.summarize("min_submodular_slack_cells", min_slack)?;
    report.verdict(Verdict::exact(
        "solver_matches_enumeration",
        "minimal and maximal solver outputs equal the enumerated minimal energy and extreme minimizers",
        oracle_fail as i128,
    ));
    report.verdict(Verdict::exact(
        "coarea_exact",
        "the oscillation integral equals its level-set decomposition exactly",
        coarea_fail as i128,
    ));
    report.verdict(Verdict::at_least(
        "submodular",
        "Per_r(A) + Per_r(B) >= Per_r(A and B) + Per_r(A or B), in oscillation cells",
        min_slack as f64,
        0.0,
        0.0,
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_specs_are_small_and_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let s = random_small_spec(&mut rng, 16).unwrap();
            assert!(s.free_count() >= 1 && s.free_count() <= 16);
        }
    }

    #[test]
    fn short_suite_passes() {
        let cfg = SelftestConfig {
            solver_instances: 8,
            coarea_fields: 6,
            submodular_pairs: 30,
            ..Default::default()
        };
        let r = run_selftest(&cfg, 2).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
    }
}
