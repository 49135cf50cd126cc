//! Experiment harness. Every experiment turns a config and a seed into a
//! [`Report`]; the same inputs always give byte-identical JSON.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::io::atomic_write;

pub mod blobs;
pub mod density;
pub mod failcom;
pub mod gamma;
pub mod isoperimetry;
pub mod oned;
pub mod poincare;
pub mod planelike_sweep;
pub mod selftest;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "==")]
    Equal,
}

/// One pass/fail assertion. `probes` says which property is being tested;
/// `tolerance` is the slack already folded into `threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub probes: String,
    pub observed: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Verdict {
    pub fn at_least(name: &str, probes: &str, observed: f64, threshold: f64, tolerance: f64) -> Self {
        Self::make(name, probes, observed, Relation::AtLeast, threshold, tolerance, observed >= threshold)
    }

    pub fn at_most(name: &str, probes: &str, observed: f64, threshold: f64, tolerance: f64) -> Self {
        Self::make(name, probes, observed, Relation::AtMost, threshold, tolerance, observed <= threshold)
    }

    /// Exact equality of two scaled integers, reported as their difference.
    pub fn exact(name: &str, probes: &str, difference: i128) -> Self {
        Self::make(name, probes, difference as f64, Relation::Equal, 0.0, 0.0, difference == 0)
    }

    pub fn holds(name: &str, probes: &str, ok: bool) -> Self {
        Self::make(name, probes, ok as u8 as f64, Relation::Equal, 1.0, 0.0, ok)
    }

    fn make(name: &str, probes: &str, observed: f64, relation: Relation, threshold: f64, tolerance: f64, passed: bool) -> Self {
        Verdict {
            name: name.to_string(),
            probes: probes.to_string(),
            observed,
            relation,
            threshold,
            tolerance,
            passed: passed && !observed.is_nan(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub config: Value,
    pub seed: u64,
    pub samples: Vec<Value>,
    pub summary: Value,
    pub verdicts: Vec<Verdict>,
}

impl Report {
    pub fn new(name: &str, config: &impl Serialize, seed: u64) -> Result<Self> {
        Ok(Report {
            name: name.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            samples: Vec::new(),
            summary: Value::Object(Default::default()),
            verdicts: Vec::new(),
        })
    }

    pub fn sample(&mut self, record: impl Serialize) -> Result<()> {
        self.samples.push(serde_json::to_value(record)?);
        Ok(())
    }

    pub fn summarize(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        let v = serde_json::to_value(value)?;
        if let Value::Object(map) = &mut self.summary {
            map.insert(key.to_string(), v);
        }
        Ok(())
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Flat CSV of the sample records: one column per top-level key of the
    /// first record, nested values written as JSON.
    pub fn samples_csv(&self) -> Result<String> {
        let Some(Value::Object(first)) = self.samples.first() else {
            return Ok(String::new());
        };
        let keys: Vec<&String> = first.keys().collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(keys.iter().map(|k| k.as_str())).map_err(csv_err)?;
        for s in &self.samples {
            let row = keys.iter().map(|k| match s.get(k.as_str()) {
                None | Some(Value::Null) => String::new(),
                Some(Value::String(t)) => t.clone(),
                Some(v) => v.to_string(),
            });
            w.write_record(row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    /// Writes `<dir>/<name>.json` and, when there are samples, `<dir>/<name>.csv`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.json", self.name));
        atomic_write(&path, self.to_json()?.as_bytes())?;
        if !self.samples.is_empty() {
            atomic_write(&dir.join(format!("{}.csv", self.name)), self.samples_csv()?.as_bytes())?;
        }
        Ok(path)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Experiment names accepted by [`default_config`] and [`run_named`].
pub const EXPERIMENTS: &[&str] = &[
    "isoperimetric",
    "relative_isoperimetric",
    "poincare",
    "density",
    "failcom",
    "planelike",
    "oned",
    "gamma",
    "selftest",
];

fn unknown(name: &str) -> Error {
    Error::InvalidParameter {
        name: "experiment",
        reason: format!("`{name}` is not one of {}", EXPERIMENTS.join(", ")),
    }
}

/// Default configuration of a named experiment as JSON.
pub fn default_config(name: &str) -> Result<Value> {
    Ok(match name {
        "isoperimetric" => serde_json::to_value(isoperimetry::IsoperimetricConfig::default())?,
        "relative_isoperimetric" => serde_json::to_value(isoperimetry::RelativeConfig::default())?,
        "poincare" => serde_json::to_value(poincare::PoincareConfig::default())?,
        "density" => serde_json::to_value(density::DensityConfig::default())?,
        "failcom" => serde_json::to_value(failcom::FailcomConfig::default())?,
        "planelike" => serde_json::to_value(planelike_sweep::PlanelikeSweepConfig::default())?,
        "oned" => serde_json::to_value(oned::OnedConfig::default())?,
        "gamma" => serde_json::to_value(gamma::GammaConfig::default())?,
        "selftest" => serde_json::to_value(selftest::SelftestConfig::default())?,
        _ => return Err(unknown(name)),
    })
}

/// Runs a named experiment on a JSON configuration; missing keys are an error.
pub fn run_named(name: &str, config: Value, jobs: usize) -> Result<Report> {
    match name {
        "isoperimetric" => isoperimetry::run_isoperimetric(&serde_json::from_value(config)?, jobs),
        "relative_isoperimetric" => isoperimetry::run_relative(&serde_json::from_value(config)?, jobs),
        "poincare" => poincare::run_poincare(&serde_json::from_value(config)?, jobs),
        "density" => density::run_density(&serde_json::from_value(config)?),
        "failcom" => failcom::run_failcom(&serde_json::from_value(config)?),
        "planelike" => planelike_sweep::run_planelike_sweep(&serde_json::from_value(config)?, jobs),
        "oned" => oned::run_oned(&serde_json::from_value(config)?),
        "gamma" => gamma::run_gamma(&serde_json::from_value(config)?),
        "selftest" => selftest::run_selftest(&serde_json::from_value(config)?, jobs),
        _ => Err(unknown(name)),
    }
}

/// Per-item seeds drawn up front so results do not depend on scheduling.
pub fn derive_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen()).collect()
}

/// `f(0..count)` on up to `jobs` scoped threads, results in index order.
/// The first error wins.
pub fn parallel_map<T: Send>(jobs: usize, count: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let jobs = jobs.clamp(1, count.max(1));
    if jobs == 1 {
        return (0..count).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T>>>> = Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let out = f(i);
                slots.lock().unwrap()[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|o| o.expect("every index is visited"))
        .collect()
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 / 3.0 * std::f64::consts::PI,
        _ => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_has_a_default() {
        for name in EXPERIMENTS {
            assert!(default_config(name).unwrap().is_object());
        }
        assert!(default_config("nope").is_err());
    }

    #[test]
    fn parallel_map_keeps_order() {
        let v = parallel_map(3, 50, |i| Ok(i * i)).unwrap();
        assert_eq!(v, (0..50).map(|i| i * i).collect::<Vec<_>>());
        let e = parallel_map(2, 5, |i| if i == 3 { Err(Error::EmptySet) } else { Ok(i) });
        assert!(e.is_err());
    }

    #[test]
    fn verdict_relations() {
        assert!(Verdict::at_least("a", "p", 1.0, 1.0, 0.0).passed);
        assert!(!Verdict::at_most("a", "p", 1.1, 1.0, 0.0).passed);
        assert!(!Verdict::at_least("a", "p", f64::NAN, 0.0, 0.0).passed);
        assert!(Verdict::exact("a", "p", 0).passed);
    }

    #[test]
    fn report_roundtrip_and_csv() {
        let mut r = Report::new("t", &serde_json::json!({"x": 1}), 7).unwrap();
        r.sample(serde_json::json!({"i": 0, "v": 0.5, "s": "a,b"})).unwrap();
        r.summarize("max", 0.5).unwrap();
        r.verdict(Verdict::holds("ok", "nothing", true));
        let back: Report = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.samples_csv().unwrap(), "i,s,v\n0,\"a,b\",0.5\n");
    }
}
