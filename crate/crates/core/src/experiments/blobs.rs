//! Random connected-looking shapes: smoothed lattice noise minus a radial
//! bowl, cut at the level that selects an exact number of cells.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::grid::{BinaryMask, Bits, ExtensionRule, GridGeometry, MAX_DIM};

/// Uniform values on a coarse lattice, interpolated multilinearly.
pub struct LatticeNoise {
    dim: usize,
    lo: [f64; MAX_DIM],
    spacing: f64,
    counts: [usize; MAX_DIM],
    values: Vec<f64>,
}

impl LatticeNoise {
    /// Noise covering the box `[lo, hi]` (per axis) with the given node spacing.
    pub fn new(rng: &mut impl Rng, lo: &[f64], hi: &[f64], spacing: f64) -> Self {
        let dim = lo.len();
        let mut l = [0.0; MAX_DIM];
        let mut counts = [1usize; MAX_DIM];
        for i in 0..dim {
            l[i] = lo[i];
            counts[i] = ((hi[i] - lo[i]) / spacing).ceil() as usize + 2;
        }
        let total: usize = counts.iter().product();
        LatticeNoise {
            dim,
            lo: l,
            spacing,
            counts,
            values: (0..total).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for i in 0..self.dim {
            let t = ((x[i] - self.lo[i]) / self.spacing).max(0.0);
            let k = (t.floor() as usize).min(self.counts[i] - 2);
            base[i] = k;
            frac[i] = (t - k as f64).min(1.0);
        }
        let mut sum = 0.0;
        for corner in 0..(1usize << self.dim) {
            let mut w = 1.0;
            let mut lin = 0;
            let mut stride = 1;
            for i in 0..self.dim {
                let bit = corner >> i & 1;
                w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
                lin += (base[i] + bit) * stride;
                stride *= self.counts[i];
            }
            sum += w * self.values[lin];
        }
        sum
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BlobParams {
    pub center: Vec<f64>,
    /// Radius of the bowl `|x - center|² / radius²` subtracted from the noise.
    pub radius: f64,
    pub amplitude: f64,
    pub noise_spacing: f64,
    /// Cells closer than this to the edge of the stored window are never set.
    pub margin: f64,
}

/// The `cells` highest-scoring cells under `amplitude·noise − |x−c|²/radius²`,
/// ties broken by linear index. Exterior rule: empty.
pub fn random_blob(geom: &GridGeometry, params: &BlobParams, cells: usize, rng: &mut impl Rng) -> Result<BinaryMask> {
    let n = geom.dim();
    let lo: Vec<f64> = (0..n).map(|i| geom.origin()[i]).collect();
    let hi: Vec<f64> = (0..n)
        .map(|i| geom.origin()[i] + geom.shape()[i] as f64 * geom.spacing())
        .collect();
    let noise = LatticeNoise::new(rng, &lo, &hi, params.noise_spacing);
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(geom.len());
    for l in 0..geom.len() {
        let c = geom.center_of(l);
        let inside = (0..n).all(|i| c[i] - lo[i] >= params.margin && hi[i] - c[i] >= params.margin);
        if !inside {
            continue;
        }
        let d2: f64 = (0..n).map(|i| (c[i] - params.center[i]).powi(2)).sum();
        let s = params.amplitude * noise.value(&c[..n]) - d2 / (params.radius * params.radius);
        scored.push((s, l));
    }
    if cells > scored.len() {
        return Err(invalid("cells", format!("{cells} exceeds the {} admissible cells", scored.len())));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut bits: Bits = Bits::repeat(false, geom.len());
    for &(_, l) in &scored[..cells] {
        bits.set(l, true);
    }
    BinaryMask::from_bits(geom, bits, ExtensionRule::ConstantOutside)
}

/// Center of mass of the set cells.
pub fn centroid(mask: &BinaryMask) -> Vec<f64> {
    let g = mask.geometry();
    let n = g.dim();
    let mut acc = vec![0.0; n];
    let mut count = 0usize;
    for l in mask.bits().iter_ones() {
        let c = g.center_of(l);
        for i in 0..n {
            acc[i] += c[i];
        }
        count += 1;
    }
    acc.iter().map(|a| a / count.max(1) as f64).collect()
}

/// `min_c |E Δ B_radius(c)| / |E|` by compass search from the centroid,
/// down to steps of `h/8`. The objective is piecewise constant, so this is
/// an upper bound on the true infimum.
pub fn ball_asymmetry(mask: &BinaryMask, radius: f64) -> Result<f64> {
    let g = mask.geometry();
    let n = g.dim();
    let total = mask.count().max(1) as f64;
    let eval = |c: &[f64]| -> Result<usize> {
        let b = BinaryMask::from_predicate(g, mask.extension().clone(), |x| {
            (0..n).map(|i| (x[i] - c[i]).powi(2)).sum::<f64>() <= radius * radius
        })?;
        mask.symmetric_difference_count(&b)
    };
    let mut c = centroid(mask);
    let mut best = eval(&c)?;
    let mut step = 4.0 * g.spacing();
    while step >= g.spacing() / 8.0 {
        let mut moved = false;
        for i in 0..n {
            for sgn in [-1.0, 1.0] {
                let mut t = c.clone();
                t[i] += sgn * step;
                let v = eval(&t)?;
                if v < best {
                    best = v;
                    c = t;
                    moved = true;
                }
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    Ok(best as f64 / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shifted_disk_has_small_asymmetry() {
        let g = GridGeometry::centered(2, 2.0, 0.05).unwrap();
        let d = BinaryMask::from_predicate(&g, ExtensionRule::ConstantOutside, |x| {
            (x[0] - 0.31).powi(2) + (x[1] + 0.17).powi(2) <= 1.0
        })
        .unwrap();
        assert!(ball_asymmetry(&d, 1.0).unwrap() < 0.01);
    }

    #[test]
    fn exact_cell_count_and_determinism() {
        let g = GridGeometry::centered(2, 2.0, 0.05).unwrap();
        let p = BlobParams {
            center: vec![0.0, 0.0],
            radius: 1.0,
            amplitude: 1.0,
            noise_spacing: 0.5,
            margin: 0.2,
        };
        let a = random_blob(&g, &p, 700, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = random_blob(&g, &p, 700, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a.count(), 700);
        assert_eq!(a, b);
        assert!(random_blob(&g, &p, g.len(), &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn zero_amplitude_gives_a_disk() {
        let g = GridGeometry::centered(2, 2.0, 0.05).unwrap();
        let p = BlobParams {
            center: vec![0.0, 0.0],
            radius: 1.0,
            amplitude: 0.0,
            noise_spacing: 0.5,
            margin: 0.0,
        };
        let a = random_blob(&g, &p, 1000, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let c = centroid(&a);
        assert!(c[0].abs() < 0.05 && c[1].abs() < 0.05);
        // every set cell is no farther out than every unset one
        let r = |l: usize| {
            let x = g.center_of(l);
            (x[0] * x[0] + x[1] * x[1]).sqrt()
        };
        let max_in = a.bits().iter_ones().map(r).fold(0.0, f64::max);
        let min_out = a.bits().iter_zeros().map(r).fold(f64::INFINITY, f64::min);
        assert!(max_in <= min_out);
    }

    #[test]
    fn noise_interpolates_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let nz = LatticeNoise::new(&mut rng, &[0.0, 0.0], &[1.0, 1.0], 0.5);
        let v = nz.value(&[0.5, 0.5]);
        assert!((nz.value(&[0.5 + 1e-9, 0.5]) - v).abs() < 1e-6);
        assert!(v.abs() <= 1.0);
    }
}
