//! Shape rasterizers: a cell is set iff its center satisfies the predicate.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{BinaryMask, ExtensionRule, GridGeometry};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// `|x - center| <= radius`.
    Ball { center: Vec<f64>, radius: f64 },
    /// `normal · x <= offset`.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    /// `inner < |x - center| <= outer`.
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    /// `Σ ((x_i - c_i) / a_i)² <= 1`.
    Ellipsoid { center: Vec<f64>, semi_axes: Vec<f64> },
    /// `|x_i - c_i| <= half_side` on every axis.
    Cube { center: Vec<f64>, half_side: f64 },
    /// Slabs `frac((x_axis - phase) / period) < duty`.
    Stripes {
        axis: usize,
        period: f64,
        duty: f64,
        #[serde(default)]
        phase: f64,
    },
    /// One flag per cell, row-major.
    Bits { cells: Vec<bool> },
}

impl Shape {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        Shape::Ball {
            center: center.to_vec(),
            radius,
        }
    }

    pub fn annulus(center: &[f64], inner: f64, outer: f64) -> Self {
        Shape::Annulus {
            center: center.to_vec(),
            inner,
            outer,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let len_ok = |v: &[f64], what: &str| {
            if v.len() == dim {
                Ok(())
            } else {
                Err(Error::InvalidGeometry(format!("{what} length differs from dim")))
            }
        };
        match self {
            Shape::Ball { center, radius } => {
                len_ok(center, "center")?;
                if !(*radius >= 0.0) {
                    return Err(Error::DegenerateShape(format!("ball radius {radius} < 0")));
                }
            }
            Shape::HalfSpace { normal, offset } => {
                len_ok(normal, "normal")?;
                if normal.iter().all(|&v| v == 0.0) {
                    return Err(Error::DegenerateShape("half-space normal is zero".into()));
                }
                if !offset.is_finite() {
                    return Err(invalid("offset", "must be finite"));
                }
            }
            Shape::Annulus {
                center,
                inner,
                outer,
            } => {
                len_ok(center, "center")?;
                if !(*inner >= 0.0 && inner <= outer) {
                    return Err(Error::DegenerateShape(format!(
                        "annulus radii must satisfy 0 <= {inner} <= {outer}"
                    )));
                }
            }
            Shape::Ellipsoid { center, semi_axes } => {
                len_ok(center, "center")?;
                len_ok(semi_axes, "semi_axes")?;
                if semi_axes.iter().any(|&a| !(a > 0.0)) {
                    return Err(Error::DegenerateShape("ellipsoid semi-axes must be positive".into()));
                }
            }
            Shape::Cube { center, half_side } => {
                len_ok(center, "center")?;
                if !(*half_side >= 0.0) {
                    return Err(Error::DegenerateShape("cube half side < 0".into()));
                }
            }
            Shape::Stripes {
                axis, period, duty, ..
            } => {
                if *axis >= dim {
                    return Err(invalid("axis", format!("{axis} >= dim {dim}")));
                }
                if !(*period > 0.0) || !(0.0..=1.0).contains(duty) {
                    return Err(Error::DegenerateShape("stripes need period > 0, duty in [0,1]".into()));
                }
            }
            Shape::Bits { .. } => {}
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let dist2 = |c: &[f64]| -> f64 { c.iter().zip(x).map(|(c, x)| (x - c) * (x - c)).sum() };
        match self {
            Shape::Ball { center, radius } => *radius > 0.0 && dist2(center) <= radius * radius,
            Shape::HalfSpace { normal, offset } => {
                normal.iter().zip(x).map(|(n, x)| n * x).sum::<f64>() <= *offset
            }
            Shape::Annulus {
                center,
                inner,
                outer,
            } => {
                let d = dist2(center);
                d > inner * inner && d <= outer * outer
            }
            Shape::Ellipsoid { center, semi_axes } => {
                let s: f64 = (0..x.len())
                    .map(|i| ((x[i] - center[i]) / semi_axes[i]).powi(2))
                    .sum();
                s <= 1.0
            }
            Shape::Cube { center, half_side } => {
                center.iter().zip(x).all(|(c, x)| (x - c).abs() <= *half_side)
            }
            Shape::Stripes {
                axis,
                period,
                duty,
                phase,
            } => {
                let t = (x[*axis] - phase) / period;
                t - t.floor() < *duty
            }
            Shape::Bits { .. } => false,
        }
    }

    /// Exterior rule that continues the shape beyond the window, when one exists.
    pub fn natural_extension(&self) -> ExtensionRule {
        if let Shape::HalfSpace { normal, offset } = self {
            if normal.iter().all(|v| v.fract() == 0.0) {
                return ExtensionRule::HalfSpace {
                    normal: normal.iter().map(|&v| v as i64).collect(),
                    offset: *offset,
                    complement: false,
                };
            }
        }
        ExtensionRule::ConstantOutside
    }
}

/// Rasterizes `shape`, continuing it outside the window by its natural rule
/// (half-spaces with integer normals continue as half-spaces, everything
/// else is empty outside).
pub fn rasterize(shape: &Shape, geom: &GridGeometry) -> Result<BinaryMask> {
    rasterize_with(shape, geom, shape.natural_extension())
}

pub fn rasterize_with(shape: &Shape, geom: &GridGeometry, extension: ExtensionRule) -> Result<BinaryMask> {
    shape.validate(geom.dim())?;
    if let Shape::Bits { cells } = shape {
        if cells.len() != geom.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} bits for {} cells",
                cells.len(),
                geom.len()
            )));
        }
        return BinaryMask::from_bools(geom, cells, extension);
    }
    BinaryMask::from_predicate(geom, extension, |x| shape.contains(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{volume, Window};
    use std::f64::consts::PI;

    #[test]
    fn zero_ball_is_empty() {
        let g = GridGeometry::centered(2, 1.0, 0.1).unwrap();
        let m = rasterize(&Shape::ball(&[0.0, 0.0], 0.0), &g).unwrap();
        assert_eq!(m.count(), 0);
    }

    #[test]
    fn half_space_sets_bottom_rows() {
        let g = GridGeometry::new(&[4, 4], 1.0, &[-2.0, -2.0]).unwrap();
        let m = rasterize(
            &Shape::HalfSpace {
                normal: vec![0.0, 1.0],
                offset: 0.0,
            },
            &g,
        )
        .unwrap();
        for l in 0..g.len() {
            assert_eq!(m.get(l), g.index(l)[1] < 2);
        }
        assert!(matches!(m.extension(), ExtensionRule::HalfSpace { .. }));
    }

    #[test]
    fn annulus_volume() {
        let g = GridGeometry::centered(2, 1.2, 0.05).unwrap();
        let m = rasterize(&Shape::annulus(&[0.0, 0.0], 0.5, 1.0), &g).unwrap();
        let v = volume(&m, &Window::full(&g)).unwrap();
        let exact = PI * (1.0 - 0.25);
        assert!((v - exact).abs() / exact < 0.02, "{v} vs {exact}");
    }

    #[test]
    fn disk_area() {
        let g = GridGeometry::centered(2, 2.5, 0.01).unwrap();
        let m = rasterize(&Shape::ball(&[0.0, 0.0], 2.0), &g).unwrap();
        let v = volume(&m, &Window::full(&g)).unwrap();
        assert!((v - 4.0 * PI).abs() / (4.0 * PI) < 0.005);
    }

    #[test]
    fn degenerate_shapes_rejected() {
        let g = GridGeometry::centered(2, 1.0, 0.1).unwrap();
        assert!(matches!(
            rasterize(&Shape::ball(&[0.0, 0.0], -1.0), &g),
            Err(Error::DegenerateShape(_))
        ));
        let hs = Shape::HalfSpace {
            normal: vec![0.0, 0.0],
            offset: 0.0,
        };
        assert!(matches!(rasterize(&hs, &g), Err(Error::DegenerateShape(_))));
    }

    #[test]
    fn stripes_duty() {
        let g = GridGeometry::new(&[100], 0.01, &[0.0]).unwrap();
        let s = Shape::Stripes {
            axis: 0,
            period: 0.25,
            duty: 0.5,
            phase: 0.0,
        };
        assert_eq!(rasterize(&s, &g).unwrap().count(), 48);
    }
}
