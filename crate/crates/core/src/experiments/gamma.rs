//! `Per_r` against the classical perimeter as `r → 0`, with `h = r / ratio`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Report, Verdict};
use crate::energy::perimeter_r;
use crate::error::{invalid, Result};
use crate::grid::{GridGeometry, Window};
use crate::raster::{rasterize, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothShape {
    Disk { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Square { side: f64 },
}

impl SmoothShape {
    pub fn raster(&self) -> Shape {
        match *self {
            SmoothShape::Disk { radius } => Shape::ball(&[0.0, 0.0], radius),
            SmoothShape::Ellipse { a, b } => Shape::Ellipsoid {
                center: vec![0.0, 0.0],
                semi_axes: vec![a, b],
            },
            SmoothShape::Square { side } => Shape::Cube {
                center: vec![0.0, 0.0],
                half_side: side / 2.0,
            },
        }
    }

    pub fn extent(&self) -> f64 {
        match *self {
            SmoothShape::Disk { radius } => radius,
            SmoothShape::Ellipse { a, b } => a.max(b),
            SmoothShape::Square { side } => side / 2.0 * std::f64::consts::SQRT_2,
        }
    }

    /// Classical perimeter. The ellipse uses the trapezoid rule on the
    /// periodic arc-length integrand, which converges geometrically.
    pub fn perimeter(&self) -> f64 {
        match *self {
            SmoothShape::Disk { radius } => 2.0 * std::f64::consts::PI * radius,
            SmoothShape::Square { side } => 4.0 * side,
            SmoothShape::Ellipse { a, b } => {
                let m = 4096;
                let dt = 2.0 * std::f64::consts::PI / m as f64;
                (0..m)
                    .map(|i| {
                        let t = i as f64 * dt;
                        (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt()
                    })
                    .sum::<f64>()
                    * dt
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaConfig {
    pub shape: SmoothShape,
    pub radii: Vec<f64>,
    /// `h = r / h_ratio`.
    pub h_ratio: f64,
    pub final_tolerance: f64,
}

impl Default for GammaConfig {
    fn default() -> Self {
        GammaConfig {
            shape: SmoothShape::Ellipse { a: 2.0, b: 1.0 },
            radii: vec![0.4, 0.2, 0.1],
            h_ratio: 20.0,
            final_tolerance: 0.03,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaPoint {
    pub r: f64,
    pub h: f64,
    pub per_r: f64,
    pub relative_error: f64,
}

pub fn gamma_points(shape: &SmoothShape, radii: &[f64], h_ratio: f64) -> Result<Vec<GammaPoint>> {
    let truth = shape.perimeter();
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0) {
                return Err(invalid("r", "radii must be positive"));
            }
            let h = r / h_ratio;
            let geom = GridGeometry::centered(2, shape.extent() + r + 2.0 * h, h)?;
            let mask = rasterize(&shape.raster(), &geom)?;
            let per = perimeter_r(&mask, &Window::full(&geom), r)?;
            Ok(GammaPoint {
                r,
                h,
                per_r: per,
                relative_error: (per - truth).abs() / truth,
            })
        })
        .collect()
}

pub fn gamma_sweep(shape: SmoothShape, radii: &[f64], h_ratio: f64) -> Result<Report> {
    run_gamma(&GammaConfig {
        shape,
        radii: radii.to_vec(),
        h_ratio,
        ..GammaConfig::default()
    })
}

pub fn run_gamma(cfg: &GammaConfig) -> Result<Report> {
    if cfg.radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("radii", "must be strictly decreasing"));
    }
    let mut report = Report::new("gamma", cfg, 0)?;
    let pts = gamma_points(&cfg.shape, &cfg.radii, cfg.h_ratio)?;
    for p in &pts {
        report.sample(json!(p))?;
    }
    let errors: Vec<f64> = pts.iter().map(|p| p.relative_error).collect();
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let last = errors.last().copied().unwrap_or(f64::NAN);
    report.summarize("classical_perimeter", cfg.shape.perimeter())?;
    report.summarize("relative_errors", &errors)?;
    report.verdict(Verdict::holds(
        "errors_strictly_decreasing",
        "the distance to the classical perimeter shrinks at every step of r",
        decreasing,
    ));
    report.verdict(Verdict::at_most(
        "final_error",
        "at the smallest r, Per_r is within the tolerance of the classical perimeter",
        last,
        cfg.final_tolerance,
        cfg.final_tolerance,
    ));
    Ok(report)
}
