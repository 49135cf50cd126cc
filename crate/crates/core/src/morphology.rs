//! Distance transforms, dilation and erosion by closed balls, oscillation
//! fields and cube hulls.
//!
//! Everything here respects the mask's exterior rule: a window cell near the
//! edge of the stored window sees the extended set, not a truncated one.
//! The squared distance transform is the separable lower-envelope scheme
//! run in exact integer arithmetic (intersections compared as rationals), so
//! thresholding it against `(r/h)²` reproduces the stencil definition with
//! no floating-point disagreement.

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, Bits, ExtensionRule, GridGeometry, Index, Window, MAX_DIM};
use crate::stencil::{ball_stencil, radius_sq_cells, BallStencil};

const INF: i64 = i64::MAX / 4;

/// Squared Euclidean distances (length²) from every cell center to the
/// nearest center of the extended set.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    geometry: GridGeometry,
    cells_sq: Vec<i64>,
}

impl DistanceField {
    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    /// Squared distances in cell units (exact integers).
    pub fn cells_sq(&self) -> &[i64] {
        &self.cells_sq
    }

    pub fn values(&self) -> Vec<f64> {
        let h2 = self.geometry.spacing().powi(2);
        self.cells_sq.iter().map(|&d| d as f64 * h2).collect()
    }

    pub fn get(&self, lin: usize) -> f64 {
        self.cells_sq[lin] as f64 * self.geometry.spacing().powi(2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Bound {
    NegInf,
    Finite(i128, i128),
    PosInf,
}

fn less(a: Bound, b: Bound) -> bool {
    match (a, b) {
        (Bound::NegInf, Bound::NegInf) | (Bound::PosInf, Bound::PosInf) => false,
        (Bound::NegInf, _) | (_, Bound::PosInf) => true,
        (_, Bound::NegInf) | (Bound::PosInf, _) => false,
        (Bound::Finite(an, ad), Bound::Finite(bn, bd)) => an * bd < bn * ad,
    }
}

/// Lower envelope of the parabolas `(q - p)² + f[p]`; entries equal to `INF`
/// are absent. Writes the envelope at every `q` into `out`.
fn envelope(f: &[i64], out: &mut [i64], v: &mut Vec<usize>, z: &mut Vec<Bound>) {
    v.clear();
    z.clear();
    for (q, &fq) in f.iter().enumerate() {
        if fq >= INF {
            continue;
        }
        if v.is_empty() {
            v.push(q);
            z.push(Bound::NegInf);
            z.push(Bound::PosInf);
            continue;
        }
        let qi = q as i128;
        let s = loop {
            let p = *v.last().unwrap();
            let pi = p as i128;
            let num = (fq as i128 + qi * qi) - (f[p] as i128 + pi * pi);
            let s = Bound::Finite(num, 2 * (qi - pi));
            let zk = z[v.len() - 1];
            if !less(zk, s) && v.len() > 1 {
                v.pop();
                z.pop();
                continue;
            }
            break s;
        };
        let k = v.len();
        v.push(q);
        z[k] = s;
        z.push(Bound::PosInf);
    }
    if v.is_empty() {
        out.fill(INF);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while less(z[k + 1], Bound::Finite(q as i128, 1)) {
            k += 1;
        }
        let p = v[k];
        let d = q as i64 - p as i64;
        *o = d * d + f[p];
    }
}

fn wraps(mask: &BinaryMask, axis: usize) -> bool {
    mask.geometry().periodic_axes()[axis] || matches!(mask.extension(), ExtensionRule::Periodic)
}

/// Squared cell distances on the stored window, computed on a box padded by
/// `pad` cells on every non-wrapping axis. Values larger than `(pad+1)²`
/// may overestimate the true distance.
fn padded_edt(mask: &BinaryMask, pad: i64) -> Result<Vec<i64>> {
    let g = mask.geometry();
    if g.is_sheared() {
        return Err(Error::Unsupported("distance transform"));
    }
    let dim = g.dim();
    let mut p = [0i64; MAX_DIM];
    let mut size = [1usize; MAX_DIM];
    for i in 0..dim {
        p[i] = if wraps(mask, i) { 0 } else { pad };
        size[i] = g.shape()[i] + 2 * p[i] as usize;
    }
    let total: usize = size.iter().product();
    let mut f = vec![INF; total];
    for c in 0..size[2] {
        for b in 0..size[1] {
            for a in 0..size[0] {
                let idx: Index = [a as i64 - p[0], b as i64 - p[1], c as i64 - p[2]];
                if mask.contains(idx) {
                    f[(c * size[1] + b) * size[0] + a] = 0;
                }
            }
        }
    }

    let stride = [1, size[0], size[0] * size[1]];
    let mut v = Vec::new();
    let mut z = Vec::new();
    for axis in 0..dim {
        let n = size[axis];
        let wrap = wraps(mask, axis);
        let len = if wrap { 3 * n } else { n };
        let mut line = vec![0i64; len];
        let mut res = vec![0i64; len];
        let others: Vec<usize> = (0..MAX_DIM).filter(|&i| i != axis).collect();
        for u in 0..size[others[0]] {
            for w in 0..size[others[1]] {
                let base = u * stride[others[0]] + w * stride[others[1]];
                for q in 0..len {
                    line[q] = f[base + (q % n) * stride[axis]];
                }
                envelope(&line, &mut res, &mut v, &mut z);
                let off = if wrap { n } else { 0 };
                for q in 0..n {
                    f[base + q * stride[axis]] = res[q + off];
                }
            }
        }
    }

    let mut out = vec![0i64; g.len()];
    for (l, o) in out.iter_mut().enumerate() {
        let x = g.index(l);
        let a = (x[0] + p[0]) as usize;
        let b = (x[1] + p[1]) as usize;
        let c = (x[2] + p[2]) as usize;
        *o = f[(c * size[1] + b) * size[0] + a];
    }
    Ok(out)
}

fn initial_pad(mask: &BinaryMask) -> i64 {
    match mask.extension() {
        ExtensionRule::ConstantOutside | ExtensionRule::Mirror | ExtensionRule::Periodic => 0,
        ExtensionRule::ConstantInside => 1,
        ExtensionRule::HalfSpace { .. } => {
            let m = *mask.geometry().shape().iter().max().unwrap() as i64;
            m.max(4)
        }
    }
}

/// Exact squared distance transform of the extended set.
///
/// Mirror and empty exteriors never bring a nearer point than the window
/// itself; a filled exterior is always reached within one cell of the box.
/// Half-space exteriors are padded and the padding doubled until every
/// value is certified.
pub fn distance_transform(mask: &BinaryMask) -> Result<DistanceField> {
    let g = mask.geometry();
    // A half-space whose normal only has components along wrapping axes
    // looks the same in every exterior layer, so one layer decides it.
    let grows = |normal: &[i64]| (0..g.dim()).any(|i| !wraps(mask, i) && normal[i] != 0);
    let (mut pad, needs_doubling) = match mask.extension() {
        ExtensionRule::HalfSpace { normal, .. } if grows(normal) => (initial_pad(mask), true),
        ExtensionRule::HalfSpace { .. } => (1, false),
        _ => (initial_pad(mask), false),
    };
    loop {
        let d = padded_edt(mask, pad)?;
        let found = d.iter().any(|&v| v < INF);
        if !found && !needs_doubling {
            return Err(Error::EmptySet);
        }
        if found && (!needs_doubling || d.iter().all(|&v| v <= (pad + 1) * (pad + 1))) {
            return Ok(DistanceField {
                geometry: g.clone(),
                cells_sq: d,
            });
        }
        pad *= 2;
    }
}

/// Squared distances that are exact wherever they are `<= (r/h)²`.
fn thresholded_edt(mask: &BinaryMask, r: f64) -> Result<Vec<i64>> {
    let pad = match mask.extension() {
        ExtensionRule::HalfSpace { .. } => (r / mask.geometry().spacing()).ceil() as i64 + 1,
        _ => initial_pad(mask),
    };
    padded_edt(mask, pad)
}

fn dilated_extension(ext: &ExtensionRule, r: f64) -> ExtensionRule {
    match ext {
        ExtensionRule::HalfSpace {
            normal,
            offset,
            complement,
        } => {
            let norm = normal.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
            let shift = if *complement { -r * norm } else { r * norm };
            ExtensionRule::HalfSpace {
                normal: normal.clone(),
                offset: offset + shift,
                complement: *complement,
            }
        }
        other => other.clone(),
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(crate::error::invalid("r", format!("{r} must be nonnegative")))
    }
}

/// Cells of the stored window whose closed `r`-ball meets the extended set.
///
/// The exterior of the result continues the input rule (half-spaces move out
/// by `r`). For an empty exterior this ignores the thin shell the dilation
/// adds just outside the window.
pub fn dilate(mask: &BinaryMask, r: f64) -> Result<BinaryMask> {
    check_radius(r)?;
    if r == 0.0 {
        return Ok(mask.clone());
    }
    let g = mask.geometry();
    let ext = dilated_extension(mask.extension(), r);
    if g.is_sheared() {
        let st = ball_stencil(r, g.spacing(), g.dim())?;
        return BinaryMask::from_bits(g, dilate_bits_by_stencil(mask, &st), ext);
    }
    let bound = radius_sq_cells(r, g.spacing());
    let bits: Bits = thresholded_edt(mask, r)?
        .iter()
        .map(|&v| v < INF && (v as f64) <= bound)
        .collect();
    BinaryMask::from_bits(g, bits, ext)
}

/// `complement(dilate(complement(E), r))`.
pub fn erode(mask: &BinaryMask, r: f64) -> Result<BinaryMask> {
    Ok(dilate(&mask.complement(), r)?.complement())
}

/// Cells whose closed `r`-ball meets both the set and its complement.
pub fn oscillation_field(mask: &BinaryMask, r: f64) -> Result<BinaryMask> {
    if !(r > 0.0) {
        return Err(crate::error::invalid("r", format!("{r} must be positive")));
    }
    let inner = dilate(mask, r)?;
    let outer = dilate(&mask.complement(), r)?;
    let mut bits = inner.bits().clone();
    bits &= outer.bits().as_bitslice();
    BinaryMask::from_bits(mask.geometry(), bits, ExtensionRule::ConstantOutside)
}

pub(crate) fn dilate_bits_by_stencil(mask: &BinaryMask, st: &BallStencil) -> Bits {
    let g = mask.geometry();
    (0..g.len())
        .map(|l| {
            let x = g.index(l);
            st.offsets()
                .iter()
                .any(|k| mask.contains([x[0] + k[0], x[1] + k[1], x[2] + k[2]]))
        })
        .collect()
}

/// Stencil-union form of [`dilate`]; works on every geometry.
pub fn dilate_by_stencil(mask: &BinaryMask, r: f64) -> Result<BinaryMask> {
    check_radius(r)?;
    if r == 0.0 {
        return Ok(mask.clone());
    }
    let g = mask.geometry();
    let st = ball_stencil(r, g.spacing(), g.dim())?;
    BinaryMask::from_bits(
        g,
        dilate_bits_by_stencil(mask, &st),
        dilated_extension(mask.extension(), r),
    )
}

/// Cells whose whole stencil lies in the extended set.
pub fn erode_by_stencil(mask: &BinaryMask, r: f64) -> Result<BinaryMask> {
    Ok(dilate_by_stencil(&mask.complement(), r)?.complement())
}

/// Direct stencil scan for both colors.
pub fn oscillation_by_stencil(mask: &BinaryMask, r: f64) -> Result<BinaryMask> {
    let g = mask.geometry();
    let st = ball_stencil(r, g.spacing(), g.dim())?;
    let bits: Bits = (0..g.len())
        .map(|l| {
            let x = g.index(l);
            let mut seen = [false; 2];
            for k in st.offsets() {
                seen[mask.contains([x[0] + k[0], x[1] + k[1], x[2] + k[2]]) as usize] = true;
                if seen[0] && seen[1] {
                    return true;
                }
            }
            false
        })
        .collect();
    BinaryMask::from_bits(g, bits, ExtensionRule::ConstantOutside)
}

/// Union of the partition cubes that meet a set, with its classical
/// perimeter and the volume it adds.
#[derive(Clone, Debug)]
pub struct CubeHull {
    pub mask: BinaryMask,
    /// Cube side in cells.
    pub side_cells: usize,
    /// Face count between hull and non-hull cells of the window, times `h^{n-1}`.
    pub face_perimeter: f64,
    /// `|hull Δ E| h^n` over the window.
    pub symmetric_difference: f64,
}

/// Partitions the window into cubes of side `r / (4√n)`, rounded up to whole
/// cells and anchored at index 0, and keeps every cube that meets the set.
pub fn cube_hull(mask: &BinaryMask, r: f64) -> Result<CubeHull> {
    let g = mask.geometry();
    let n = g.dim();
    let h = g.spacing();
    let side = r / (4.0 * (n as f64).sqrt());
    if !(side / h >= 1.0 - 1e-9) {
        return Err(Error::CubeTooSmall { r, h });
    }
    let s = (side / h - 1e-9).ceil() as usize;
    let mut blocks = [1usize; MAX_DIM];
    for i in 0..n {
        blocks[i] = g.shape()[i].div_ceil(s);
    }
    let block_of = |x: &Index| -> usize {
        let b0 = x[0] as usize / s;
        let b1 = if n > 1 { x[1] as usize / s } else { 0 };
        let b2 = if n > 2 { x[2] as usize / s } else { 0 };
        (b2 * blocks[1] + b1) * blocks[0] + b0
    };
    let mut hit = vec![false; blocks.iter().product()];
    for l in mask.bits().iter_ones() {
        hit[block_of(&g.index(l))] = true;
    }
    let bits: Bits = (0..g.len()).map(|l| hit[block_of(&g.index(l))]).collect();
    let hull = BinaryMask::from_bits(g, bits, ExtensionRule::ConstantOutside)?;

    let mut faces = 0usize;
    for l in 0..g.len() {
        let x = g.index(l);
        for axis in 0..n {
            let mut y = x;
            y[axis] += 1;
            if (y[axis] as usize) < g.shape()[axis] && hull.get(l) != hull.get(g.linear(&y)) {
                faces += 1;
            }
        }
    }
    let sym = hull.symmetric_difference_count(mask)?;
    Ok(CubeHull {
        mask: hull,
        side_cells: s,
        face_perimeter: faces as f64 * h.powi(n as i32 - 1),
        symmetric_difference: sym as f64 * g.cell_volume(),
    })
}

/// Number of window cells in the oscillation field.
pub fn oscillation_count(mask: &BinaryMask, window: &Window, r: f64) -> Result<usize> {
    if window.geometry() != mask.geometry() {
        return Err(Error::IncompatibleGeometry);
    }
    let field = oscillation_field(mask, r)?;
    let mut bits = field.bits().clone();
    bits &= window.cells().as_bitslice();
    Ok(bits.count_ones())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::volume;
    use crate::raster::{rasterize, Shape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn brute_edt(mask: &BinaryMask) -> Vec<i64> {
        let g = mask.geometry();
        let set: Vec<Index> = mask.bits().iter_ones().map(|l| g.index(l)).collect();
        (0..g.len())
            .map(|l| {
                let x = g.index(l);
                set.iter()
                    .map(|y| (0..3).map(|i| (x[i] - y[i]).pow(2)).sum::<i64>())
                    .min()
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn edt_1d_single_point() {
        let g = GridGeometry::new(&[5], 1.0, &[0.0]).unwrap();
        let mut m = BinaryMask::empty(&g, ExtensionRule::ConstantOutside).unwrap();
        m.set(0, true);
        assert_eq!(distance_transform(&m).unwrap().cells_sq(), &[0, 1, 4, 9, 16]);
    }

    #[test]
    fn edt_full_and_empty() {
        let g = GridGeometry::new(&[6, 4], 0.5, &[0.0, 0.0]).unwrap();
        let full = BinaryMask::full(&g, ExtensionRule::ConstantOutside).unwrap();
        assert!(distance_transform(&full).unwrap().cells_sq().iter().all(|&d| d == 0));
        let empty = BinaryMask::empty(&g, ExtensionRule::ConstantOutside).unwrap();
        assert!(matches!(distance_transform(&empty), Err(Error::EmptySet)));
    }

    #[test]
    fn edt_two_points() {
        let g = GridGeometry::new(&[5, 5], 1.0, &[0.0, 0.0]).unwrap();
        let mut m = BinaryMask::empty(&g, ExtensionRule::ConstantOutside).unwrap();
        m.set(g.linear(&[0, 0, 0]), true);
        m.set(g.linear(&[3, 4, 0]), true);
        let d = distance_transform(&m).unwrap();
        assert_eq!(d.cells_sq()[g.linear(&[3, 0, 0])], 9);
    }

    #[test]
    fn edt_matches_brute_force_on_random_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = GridGeometry::new(&[16, 16], 1.0, &[0.0, 0.0]).unwrap();
        for _ in 0..200 {
            let p: f64 = rng.gen_range(0.02..0.5);
            let cells: Vec<bool> = (0..g.len()).map(|_| rng.gen_bool(p)).collect();
            if !cells.iter().any(|&c| c) {
                continue;
            }
            let m = BinaryMask::from_bools(&g, &cells, ExtensionRule::ConstantOutside).unwrap();
            assert_eq!(distance_transform(&m).unwrap().cells_sq(), brute_edt(&m).as_slice());
        }
    }

    #[test]
    fn periodic_edt_wraps() {
        let g = GridGeometry::new(&[10], 1.0, &[0.0])
            .unwrap()
            .with_periodic(&[true])
            .unwrap();
        let mut m = BinaryMask::empty(&g, ExtensionRule::ConstantOutside).unwrap();
        m.set(0, true);
        assert_eq!(
            distance_transform(&m).unwrap().cells_sq(),
            &[0, 1, 4, 9, 16, 25, 16, 9, 4, 1]
        );
    }

    #[test]
    fn exterior_rules_reach_the_window() {
        let g = GridGeometry::new(&[6], 1.0, &[0.0]).unwrap();
        let inside = BinaryMask::empty(&g, ExtensionRule::ConstantInside).unwrap();
        assert_eq!(distance_transform(&inside).unwrap().cells_sq(), &[1, 4, 9, 9, 4, 1]);
        let hs = BinaryMask::empty(&g, ExtensionRule::half_space(&[1], -10.0).unwrap()).unwrap();
        // nearest exterior center is at -10.5, i.e. index -11
        assert_eq!(distance_transform(&hs).unwrap().cells_sq()[0], 121);
    }

    #[test]
    fn decomposition_and_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = GridGeometry::new(&[20, 17], 1.0, &[0.0, 0.0]).unwrap();
        for ext in [
            ExtensionRule::ConstantOutside,
            ExtensionRule::ConstantInside,
            ExtensionRule::Mirror,
            ExtensionRule::Periodic,
            ExtensionRule::half_space(&[1, 2], 3.0).unwrap(),
        ] {
            for _ in 0..10 {
                let cells: Vec<bool> = (0..g.len()).map(|_| rng.gen_bool(0.3)).collect();
                let e = BinaryMask::from_bools(&g, &cells, ext.clone()).unwrap();
                for r in [1.0, 2.5, 4.0] {
                    let d = dilate(&e, r).unwrap();
                    let er = erode(&e, r).unwrap();
                    let osc = oscillation_field(&e, r).unwrap();
                    assert_eq!(d.bits(), dilate_by_stencil(&e, r).unwrap().bits());
                    assert_eq!(er.bits(), erode_by_stencil(&e, r).unwrap().bits());
                    assert_eq!(osc.bits(), oscillation_by_stencil(&e, r).unwrap().bits());
                    let mut u = osc.bits().clone();
                    u |= e.bits().as_bitslice();
                    assert_eq!(&u, d.bits());
                    let mut diff = e.bits().clone();
                    diff &= !osc.bits().clone();
                    assert_eq!(&diff, er.bits());
                }
            }
        }
    }

    #[test]
    fn one_dimensional_interface() {
        let g = GridGeometry::new(&[12], 1.0, &[-6.0]).unwrap();
        let m = rasterize(
            &Shape::HalfSpace {
                normal: vec![1.0],
                offset: 0.0,
            },
            &g,
        )
        .unwrap();
        assert_eq!(oscillation_field(&m, 2.0).unwrap().count(), 4);
    }

    #[test]
    fn empty_and_full_have_no_oscillation() {
        let g = GridGeometry::new(&[8, 8], 1.0, &[0.0, 0.0]).unwrap();
        let e = BinaryMask::empty(&g, ExtensionRule::ConstantOutside).unwrap();
        let f = BinaryMask::full(&g, ExtensionRule::ConstantInside).unwrap();
        assert_eq!(oscillation_field(&e, 2.0).unwrap().count(), 0);
        assert_eq!(oscillation_field(&f, 2.0).unwrap().count(), 0);
        assert_eq!(dilate(&e, 3.0).unwrap().count(), 0);
        assert_eq!(erode(&f, 3.0).unwrap().count(), 64);
    }

    #[test]
    fn disk_dilation_erosion_and_oscillation_volumes() {
        let g = GridGeometry::centered(2, 2.6, 0.01).unwrap();
        let w = Window::full(&g);
        let disk1 = rasterize(&Shape::ball(&[0.0, 0.0], 1.0), &g).unwrap();
        let v = volume(&dilate(&disk1, 0.5).unwrap(), &w).unwrap();
        assert!((v - PI * 2.25).abs() / (PI * 2.25) < 0.01);
        let v = volume(&erode(&disk1, 0.5).unwrap(), &w).unwrap();
        assert!((v - PI * 0.25).abs() / (PI * 0.25) < 0.01);
        assert_eq!(erode(&disk1, 1.5).unwrap().count(), 0);

        let disk2 = rasterize(&Shape::ball(&[0.0, 0.0], 2.0), &g).unwrap();
        let v = volume(&oscillation_field(&disk2, 0.5).unwrap(), &w).unwrap();
        let exact = PI * (2.5f64.powi(2) - 1.5f64.powi(2));
        assert!((v - exact).abs() / exact < 0.02);
    }

    #[test]
    fn dilation_semigroup_on_convex_sets() {
        let g = GridGeometry::centered(2, 2.0, 0.01).unwrap();
        let disk = rasterize(&Shape::ball(&[0.1, -0.2], 0.8), &g).unwrap();
        let two = dilate(&dilate(&disk, 0.3).unwrap(), 0.4).unwrap();
        let one = dilate(&disk, 0.7).unwrap();
        // within one cell layer: the difference is covered by one step of dilation
        let grown_one = dilate(&one, g.spacing() * 1.5).unwrap();
        let grown_two = dilate(&two, g.spacing() * 1.5).unwrap();
        assert!(two.is_subset_of(&grown_one).unwrap());
        assert!(one.is_subset_of(&grown_two).unwrap());
    }

    #[test]
    fn sheared_geometry_falls_back_to_stencils() {
        let g = GridGeometry::new(&[3, 12], 1.0, &[0.0, 0.0])
            .unwrap()
            .with_periodic(&[true, false])
            .unwrap()
            .with_wrap_shift(0, &[0, 1])
            .unwrap();
        let e = BinaryMask::from_predicate(&g, ExtensionRule::ConstantOutside, |x| x[1] < 5.0).unwrap();
        assert!(matches!(distance_transform(&e), Err(Error::Unsupported(_))));
        let d = dilate(&e, 1.0).unwrap();
        assert_eq!(d.bits(), dilate_by_stencil(&e, 1.0).unwrap().bits());
    }

    #[test]
    fn cube_hull_cases() {
        let g = GridGeometry::new(&[40, 40], 0.01, &[0.0, 0.0]).unwrap();
        let r = 0.05 * 4.0 * 2f64.sqrt(); // side 0.05, five cells
        let empty = BinaryMask::empty(&g, ExtensionRule::ConstantOutside).unwrap();
        assert_eq!(cube_hull(&empty, r).unwrap().mask.count(), 0);
        let cube = BinaryMask::from_predicate(&g, ExtensionRule::ConstantOutside, |x| {
            (0.05..0.1).contains(&x[0]) && (0.1..0.15).contains(&x[1])
        })
        .unwrap();
        let hull = cube_hull(&cube, r).unwrap();
        assert_eq!(hull.side_cells, 5);
        assert_eq!(hull.mask.bits(), cube.bits());
        assert_eq!(hull.symmetric_difference, 0.0);
        assert!((hull.face_perimeter - 0.2).abs() < 1e-12);
        assert!(matches!(cube_hull(&cube, 0.05), Err(Error::CubeTooSmall { .. })));
    }
}
