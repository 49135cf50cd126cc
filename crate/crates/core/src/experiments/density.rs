//! Volume growth `f(R) = |E ∩ B_R|` of minimizers around a point, sampled at
//! `R_0, R_0 + 2r, R_0 + 4r, …` while the ball stays inside the window.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::failcom::{failcom_spec, FailcomConfig};
use super::{unit_ball_volume, Report, Verdict};
use crate::error::{invalid, Result};
use crate::grid::{volume, BinaryMask, ExtensionRule, GridGeometry, Window};
use crate::mincut::{solve, Canonical, DirichletSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub f: Vec<f64>,
    pub nondecreasing: bool,
    /// Least-squares slope of `log f` against `log R` over positive values.
    pub growth_exponent: Option<f64>,
    /// Largest `c` with `f(R + 2r) >= f(R) + c f(R)^{(n-1)/n}` at every sampled step.
    pub growth_constant: Option<f64>,
    /// `f(R_k) / f(R_{k-1})` while `f` is below the volume of `B_r`.
    pub small_volume_ratios: Vec<f64>,
}

pub fn density_profile(spec: &DirichletSpec, center: &[f64], r0: f64) -> Result<DensityProfile> {
    let sol = solve(spec, Canonical::Minimal)?;
    profile_of(&sol.mask, spec.window(), spec.r(), center, r0)
}

pub fn profile_of(mask: &BinaryMask, window: &Window, r: f64, center: &[f64], r0: f64) -> Result<DensityProfile> {
    let g = mask.geometry();
    let n = g.dim();
    if center.len() != n {
        return Err(invalid("center", format!("expected {n} coordinates")));
    }
    if !(r0 > 0.0) {
        return Err(invalid("R_0", "must be positive"));
    }
    let mut radii = Vec::new();
    let mut f = Vec::new();
    let mut rad = r0;
    loop {
        let ball = Window::ball(g, center, rad)?;
        if !ball.is_subset_of(window) || !ball_fits(g, center, rad) {
            break;
        }
        radii.push(rad);
        f.push(volume(mask, &ball)?);
        rad += 2.0 * r;
    }
    if radii.is_empty() {
        return Err(invalid("R_0", "B_{R_0} is not inside the window"));
    }
    let nondecreasing = f.windows(2).all(|w| w[1] >= w[0]);
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(&f)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&a, &v)| (a.ln(), v.ln()))
        .collect();
    let growth_exponent = (pts.len() >= 2).then(|| {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    let expo = (n as f64 - 1.0) / n as f64;
    let steps: Vec<f64> = f
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| (w[1] - w[0]) / w[0].powf(expo))
        .collect();
    let growth_constant = steps.iter().copied().reduce(f64::min);
    let small = unit_ball_volume(n) * r.powi(n as i32);
    let small_volume_ratios = f
        .windows(2)
        .take_while(|w| w[1] < small)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    Ok(DensityProfile {
        center: center.to_vec(),
        radii,
        f,
        nondecreasing,
        growth_exponent,
        growth_constant,
        small_volume_ratios,
    })
}

/// The closed ball lies inside the stored box, so no part of it is clipped.
fn ball_fits(g: &GridGeometry, center: &[f64], rad: f64) -> bool {
    (0..g.dim()).all(|i| {
        let lo = g.origin()[i];
        let hi = lo + g.shape()[i] as f64 * g.spacing();
        center[i] - rad >= lo && center[i] + rad <= hi
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    pub failcom: FailcomConfig,
    /// Base radius as a multiple of `r`.
    pub r0_factor: f64,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            failcom: FailcomConfig::default(),
            r0_factor: 0.125,
        }
    }
}

/// Half-space profile against `½ ω_n R^n`, and the profile of the minimal
/// minimizer of the annulus problem around a point inside the annulus.
pub fn run_density(cfg: &DensityConfig) -> Result<Report> {
    let fc = &cfg.failcom;
    let mut report = Report::new("density", cfg, 0)?;
    let (spec, _) = failcom_spec(fc)?;
    let geom = spec.geometry().clone();
    let n = geom.dim();
    let r0 = cfg.r0_factor * fc.r;
    let origin = vec![0.0; n];

    let normal: Vec<i64> = (0..n).map(|i| (i == 0) as i64).collect();
    let hs = BinaryMask::from_predicate(&geom, ExtensionRule::half_space(&normal, 0.0)?, |x| x[0] <= 0.0)?;
    let hp = profile_of(&hs, spec.window(), fc.r, &origin, r0)?;
    // the half-plane is cell-aligned, so only cells cut by the sphere can
    // disagree with the continuum: at most half the band of width h·√n/2
    let delta = geom.spacing() * (n as f64).sqrt() / 2.0;
    let worst = hp
        .radii
        .iter()
        .zip(&hp.f)
        .map(|(&a, &v)| {
            let w = unit_ball_volume(n);
            let exact = 0.5 * w * a.powi(n as i32);
            let band = 0.5 * w * ((a + delta).powi(n as i32) - (a - delta).max(0.0).powi(n as i32));
            (v - exact).abs() / band
        })
        .fold(0.0, f64::max);

    let mut center = origin.clone();
    center[0] = 0.75 * fc.r;
    let sol = solve(&spec, Canonical::Minimal)?;
    let mp = profile_of(&sol.mask, spec.window(), fc.r, &center, r0)?;

    report.sample(json!({"set": "half_space", "profile": hp}))?;
    report.sample(json!({"set": "annulus_minimizer", "profile": mp}))?;
    report.summarize("half_space_error_over_band", worst)?;
    report.summarize("minimizer_growth_constant", mp.growth_constant)?;
    report.summarize("minimizer_growth_exponent", mp.growth_exponent)?;
    report.summarize("minimizer_small_volume_ratios", &mp.small_volume_ratios)?;
    report.verdict(Verdict::at_most(
        "half_space_volume",
        "a half-space through the center fills half of every ball, up to the cells cut by the sphere",
        worst,
        1.0,
        0.0,
    ));
    report.verdict(Verdict::holds(
        "monotone",
        "f is nondecreasing in R",
        hp.nondecreasing && mp.nondecreasing,
    ));
    report.verdict(Verdict::at_least(
        "growth_nonnegative",
        "the fitted growth constant of the minimizer is nonnegative",
        mp.growth_constant.unwrap_or(f64::NAN),
        0.0,
        0.0,
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{rasterize, Shape};

    #[test]
    fn disk_profile_saturates() {
        let g = GridGeometry::centered(2, 3.0, 0.05).unwrap();
        let e = rasterize(&Shape::ball(&[0.0, 0.0], 1.0), &g).unwrap();
        let p = profile_of(&e, &Window::full(&g), 0.25, &[0.0, 0.0], 0.5).unwrap();
        assert!(p.nondecreasing);
        assert_eq!(p.radii.len(), 6);
        let last = *p.f.last().unwrap();
        assert!((last - std::f64::consts::PI).abs() < 0.05);
        assert!(p.growth_constant.unwrap() >= 0.0);
    }

    #[test]
    fn ball_outside_window_is_rejected() {
        let g = GridGeometry::centered(2, 1.0, 0.1).unwrap();
        let e = BinaryMask::empty(&g, ExtensionRule::ConstantOutside).unwrap();
        assert!(profile_of(&e, &Window::full(&g), 0.2, &[0.0, 0.0], 2.0).is_err());
    }
}
