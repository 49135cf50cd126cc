//! `Per_r(E, Ω)` and `F_{r,g}(E, Ω)` on masks, plus the coarea identity and
//! the submodularity slack, both evaluated on integer cell counts.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{BinaryMask, ExtensionRule, FieldExtension, ScalarField, Window, WindowKind};
use crate::stencil::ball_stencil;

pub use crate::morphology::oscillation_count;

/// Fixed-point denominator for field values in the coarea check.
pub const COAREA_SCALE: f64 = (1u64 << 20) as f64;
pub const MAX_COAREA_LEVELS: usize = 64;

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(invalid("r", format!("{r} must be positive")))
    }
}

/// `h^n / 2r` times the number of oscillating cells in the window.
pub fn perimeter_r(mask: &BinaryMask, window: &Window, r: f64) -> Result<f64> {
    check_r(r)?;
    let count = oscillation_count(mask, window, r)?;
    Ok(perimeter_from_count(count, mask.geometry().cell_volume(), r))
}

pub fn perimeter_from_count(count: usize, cell_volume: f64, r: f64) -> f64 {
    count as f64 * cell_volume / (2.0 * r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub perimeter_term: f64,
    pub bulk_term: f64,
    pub total: f64,
    pub r: f64,
    pub h: f64,
    pub window: WindowKind,
    pub oscillation_cells: usize,
}

impl EnergyBreakdown {
    pub fn new(perimeter_term: f64, bulk_term: f64, r: f64, h: f64, window: WindowKind, oscillation_cells: usize) -> Self {
        EnergyBreakdown {
            perimeter_term,
            bulk_term,
            total: perimeter_term + bulk_term,
            r,
            h,
            window,
            oscillation_cells,
        }
    }
}

/// `Per_r(E, Ω) + h^n Σ_{x ∈ E∩Ω} g(x)`.
pub fn energy(mask: &BinaryMask, g: &ScalarField, window: &Window, r: f64) -> Result<EnergyBreakdown> {
    check_r(r)?;
    if g.geometry() != mask.geometry() {
        return Err(Error::IncompatibleGeometry);
    }
    let geom = mask.geometry();
    let count = oscillation_count(mask, window, r)?;
    let per = perimeter_from_count(count, geom.cell_volume(), r);
    let sum: f64 = window
        .iter()
        .filter(|&l| mask.get(l))
        .map(|l| g.get(l))
        .sum();
    Ok(EnergyBreakdown::new(
        per,
        sum * geom.cell_volume(),
        r,
        geom.spacing(),
        window.kind().clone(),
        count,
    ))
}

/// Both sides of the coarea identity, in exact fixed point and as reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoareaCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `Σ_x osc_x(u)` in units of `1 / COAREA_SCALE`.
    pub lhs_scaled: i128,
    /// `Σ_levels gap · #osc({u > level})` in the same units.
    pub rhs_scaled: i128,
    pub levels: usize,
}

impl CoareaCheck {
    pub fn exact(&self) -> bool {
        self.lhs_scaled == self.rhs_scaled
    }
}

fn quantize(v: f64) -> i64 {
    (v * COAREA_SCALE).round() as i64
}

/// Left side: `h^n Σ_{x∈Ω} (max - min of u over B_r(x))`. Right side: the
/// same quantity assembled level by level from the oscillation counts of the
/// superlevel sets `{u > s}`. Values are quantized to multiples of
/// `1 / COAREA_SCALE` first, so both sides are integers and must agree.
pub fn coarea_check(u: &ScalarField, window: &Window, r: f64) -> Result<CoareaCheck> {
    check_r(r)?;
    let geom = u.geometry();
    if window.geometry() != geom {
        return Err(Error::IncompatibleGeometry);
    }
    let q: Vec<i64> = u.values().iter().map(|&v| quantize(v)).collect();
    let mut levels = q.clone();
    if u.extension() == FieldExtension::Zero {
        levels.push(0);
    }
    levels.sort_unstable();
    levels.dedup();
    if levels.len() > MAX_COAREA_LEVELS {
        return Err(Error::TooManyLevels {
            levels: levels.len(),
            cap: MAX_COAREA_LEVELS,
        });
    }

    let st = ball_stencil(r, geom.spacing(), geom.dim())?;
    let value = |idx: [i64; 3]| -> i64 {
        let red = geom.reduce(idx);
        if geom.in_window(&red) {
            return q[geom.linear(&red)];
        }
        match u.extension() {
            FieldExtension::Zero => 0,
            FieldExtension::Periodic => {
                let mut w = red;
                for i in 0..geom.dim() {
                    w[i] = w[i].rem_euclid(geom.shape()[i] as i64);
                }
                q[geom.linear(&w)]
            }
        }
    };
    let mut lhs: i128 = 0;
    for l in window.iter() {
        let x = geom.index(l);
        let (mut lo, mut hi) = (i64::MAX, i64::MIN);
        for k in st.offsets() {
            let v = value([x[0] + k[0], x[1] + k[1], x[2] + k[2]]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        lhs += (hi - lo) as i128;
    }

    let mut rhs: i128 = 0;
    for pair in levels.windows(2) {
        let (s, gap) = (pair[0], pair[1] - pair[0]);
        let ext = match u.extension() {
            FieldExtension::Periodic => ExtensionRule::Periodic,
            FieldExtension::Zero if 0 > s => ExtensionRule::ConstantInside,
            FieldExtension::Zero => ExtensionRule::ConstantOutside,
        };
        let cells: Vec<bool> = q.iter().map(|&v| v > s).collect();
        let sup = BinaryMask::from_bools(geom, &cells, ext)?;
        rhs += gap as i128 * oscillation_count(&sup, window, r)? as i128;
    }

    let unit = geom.cell_volume() / COAREA_SCALE;
    Ok(CoareaCheck {
        lhs: lhs as f64 * unit,
        rhs: rhs as f64 * unit,
        lhs_scaled: lhs,
        rhs_scaled: rhs,
        levels: levels.len(),
    })
}

/// `#osc(A) + #osc(B) - #osc(A∩B) - #osc(A∪B)` over the window.
pub fn submodularity_slack_counts(a: &BinaryMask, b: &BinaryMask, window: &Window, r: f64) -> Result<i64> {
    check_r(r)?;
    let inter = a.intersection(b)?;
    let union = a.union(b)?;
    let c = |m: &BinaryMask| oscillation_count(m, window, r).map(|v| v as i64);
    Ok(c(a)? + c(b)? - c(&inter)? - c(&union)?)
}

/// `Per_r(A) + Per_r(B) - Per_r(A∩B) - Per_r(A∪B)`; never negative.
pub fn submodularity_slack(a: &BinaryMask, b: &BinaryMask, window: &Window, r: f64) -> Result<f64> {
    let s = submodularity_slack_counts(a, b, window, r)?;
    Ok(s as f64 * a.geometry().cell_volume() / (2.0 * r))
}
