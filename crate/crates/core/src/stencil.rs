//! Closed-ball stencils `{k ∈ Z^n : |k| h <= r}`.

use crate::error::{invalid, Error, Result};
use crate::grid::{Index, MAX_DIM};

pub const DEFAULT_STENCIL_CAP: f64 = 256.0;

// Boundary ties |k| h = r are decided on the integer side: k² <= ρ² (1 + TIE_EPS).
const TIE_EPS: f64 = 1e-9;

/// Squared stencil radius in cell units, widened by the tie tolerance.
pub fn radius_sq_cells(r: f64, h: f64) -> f64 {
    let rho = r / h;
    rho * rho * (1.0 + TIE_EPS)
}

/// Largest integer `m >= 0` with `m² <= bound`.
pub(crate) fn isqrt_floor(bound: f64) -> i64 {
    if bound < 0.0 {
        return -1;
    }
    let mut m = bound.sqrt().floor() as i64;
    while (m + 1) as f64 * (m + 1) as f64 <= bound {
        m += 1;
    }
    while m > 0 && (m as f64) * (m as f64) > bound {
        m -= 1;
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct BallStencil {
    radius: f64,
    spacing: f64,
    dim: usize,
    radius_sq: f64,
    reach: i64,
    offsets: Vec<Index>,
    rows: Vec<Row>,
}

/// A maximal run of offsets along axis 0: `k0 ∈ [-half, half]` at fixed `(k1, k2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Row {
    pub k1: i64,
    pub k2: i64,
    pub half: i64,
}

pub fn ball_stencil(r: f64, h: f64, dim: usize) -> Result<BallStencil> {
    ball_stencil_capped(r, h, dim, DEFAULT_STENCIL_CAP)
}

pub fn ball_stencil_capped(r: f64, h: f64, dim: usize, cap: f64) -> Result<BallStencil> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("r", format!("{r} must be positive")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("h", format!("{h} must be positive")));
    }
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(invalid("dim", format!("{dim} not in 1..=3")));
    }
    let ratio = r / h;
    if ratio > cap {
        return Err(Error::StencilTooLarge { ratio, cap });
    }
    let radius_sq = radius_sq_cells(r, h);
    let reach = isqrt_floor(radius_sq);
    let span = |axis: usize| if axis < dim { reach } else { 0 };

    let mut rows = Vec::new();
    for k2 in -span(2)..=span(2) {
        for k1 in -span(1)..=span(1) {
            let rest = radius_sq - (k1 * k1 + k2 * k2) as f64;
            let half = isqrt_floor(rest);
            if half >= 0 {
                rows.push(Row { k1, k2, half });
            }
        }
    }
    let offsets = rows
        .iter()
        .flat_map(|row| (-row.half..=row.half).map(move |k0| [k0, row.k1, row.k2]))
        .collect();
    Ok(BallStencil {
        radius: r,
        spacing: h,
        dim,
        radius_sq,
        reach,
        offsets,
        rows,
    })
}

impl BallStencil {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(r/h)²` with the tie tolerance applied.
    pub fn radius_sq_cells(&self) -> f64 {
        self.radius_sq
    }

    /// Largest `|k_i|` over the stencil.
    pub fn reach(&self) -> i64 {
        self.reach
    }

    pub fn offsets(&self) -> &[Index] {
        &self.offsets
    }

    pub fn cardinality(&self) -> usize {
        self.offsets.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn contains(&self, k: &Index) -> bool {
        let n2: i64 = k.iter().map(|v| v * v).sum();
        (n2 as f64) <= self.radius_sq
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_on_unit_lattice() {
        let s = ball_stencil(1.0, 1.0, 1).unwrap();
        let ks: Vec<i64> = s.offsets().iter().map(|k| k[0]).collect();
        assert_eq!(ks, vec![-1, 0, 1]);
        assert_eq!(s.cardinality(), 3);
    }

    #[test]
    fn half_spacing_disk_has_thirteen_cells() {
        let s = ball_stencil(1.0, 0.5, 2).unwrap();
        let mut brute = 0;
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                if a * a + b * b <= 4 {
                    brute += 1;
                }
            }
        }
        assert_eq!(brute, 13);
        assert_eq!(s.cardinality(), 13);
    }

    #[test]
    fn sub_cell_radius_is_a_point() {
        let s = ball_stencil(0.4, 1.0, 2).unwrap();
        assert_eq!(s.offsets(), &[[0, 0, 0]]);
    }

    #[test]
    fn ties_on_the_sphere_are_included() {
        // 0.3 / 0.1 is not exactly 3 in floating point.
        let s = ball_stencil(0.3, 0.1, 1).unwrap();
        assert_eq!(s.cardinality(), 7);
        let s = ball_stencil(0.5, 0.1, 2).unwrap();
        assert!(s.contains(&[3, 4, 0]));
    }

    #[test]
    fn cap_and_bad_inputs() {
        assert!(matches!(
            ball_stencil(300.0, 1.0, 2),
            Err(Error::StencilTooLarge { .. })
        ));
        assert!(ball_stencil(0.0, 1.0, 2).is_err());
        assert!(ball_stencil(1.0, -1.0, 2).is_err());
        assert!(ball_stencil(1.0, 1.0, 4).is_err());
    }

    #[test]
    fn isqrt_is_exact() {
        for m in 0i64..2000 {
            assert_eq!(isqrt_floor((m * m) as f64), m);
            assert_eq!(isqrt_floor((m * m) as f64 - 0.5), m - 1);
        }
    }
}
