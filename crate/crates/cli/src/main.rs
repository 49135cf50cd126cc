//! `rperim`: evaluate, minimize and experiment with `Per_r` from the shell.
//!
//! Exit codes: 0 on success, 2 on invalid input (including usage errors),
//! 3 when an experiment or the self-test reports a failed verdict.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use rperim_core::energy::{energy, perimeter_r};
use rperim_core::experiments::{default_config, run_named, Report, EXPERIMENTS};
use rperim_core::grid::{BinaryMask, ExtensionRule, FieldExtension, ScalarField, Window};
use rperim_core::io::{read_field, read_mask, write_field, write_json, write_mask};
use rperim_core::mincut::{solve, Canonical, DirichletSpec};
use rperim_core::morphology::{erode, oscillation_count};
use rperim_core::planelike::{construct_planelike, rational_basis, PeriodicForcing, StripSpec};

#[derive(Parser, Debug)]
#[command(name = "rperim", version, about = "Nonlocal r-perimeters on lattices")]
struct Cli {
    /// Print timings and verdict tables on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per_r of a mask over a window.
    Perimeter {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long, value_parser = positive, allow_hyphen_values = true)]
        r: f64,
        /// `full` or a mask file selecting the window cells.
        #[arg(long, default_value = "full")]
        window: String,
    },
    /// Per_r plus the bulk term of a forcing field.
    Energy {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        field: PathBuf,
        #[arg(long, value_parser = positive, allow_hyphen_values = true)]
        r: f64,
        #[arg(long, default_value = "full")]
        window: String,
    },
    /// Exact Dirichlet minimizer of a problem described by a JSON file.
    Solve {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides `r` from the problem file.
        #[arg(long, value_parser = positive, allow_hyphen_values = true)]
        r: Option<f64>,
        #[arg(long)]
        canonical: Option<Canonical>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimal planelike minimizer in a periodic strip.
    Planelike {
        /// Integer direction, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        omega: Vec<i64>,
        #[arg(long = "M", value_parser = half_width, allow_hyphen_values = true, default_value_t = 8.0)]
        m: f64,
        #[arg(long, value_parser = positive, allow_hyphen_values = true, default_value_t = 0.5)]
        r: f64,
        /// Defaults to r/5; 1/h must be an integer.
        #[arg(long, value_parser = positive, allow_hyphen_values = true)]
        h: Option<f64>,
        #[arg(long, value_parser = eta, allow_hyphen_values = true, default_value_t = 0.05)]
        eta: f64,
        /// `checkerboard` or `zero`.
        #[arg(long, default_value = "checkerboard")]
        g: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs a named experiment and reports its verdicts.
    Experiment(ExperimentArgs),
    /// Converts between P4 masks and CSV fields.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// CSV to P4 keeps the cells with value above this level.
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        level: f64,
    },
    /// Solver against enumeration, coarea decomposition, submodularity.
    Selftest {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = jobs, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// One of: isoperimetric, relative_isoperimetric, poincare, density,
    /// failcom, planelike, oned, gamma, selftest.
    name: String,
    /// JSON configuration; flags below override its values.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_parser = positive, allow_hyphen_values = true)]
    r: Option<f64>,
    #[arg(long, value_parser = positive, allow_hyphen_values = true)]
    h: Option<f64>,
    #[arg(long = "M", value_parser = half_width, allow_hyphen_values = true)]
    m: Option<f64>,
    #[arg(long = "K", value_parser = positive, allow_hyphen_values = true)]
    k: Option<f64>,
    #[arg(long, value_parser = eta, allow_hyphen_values = true)]
    eta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = jobs, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err("expected a finite number > 0".into()),
    }
}

fn half_width(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 2.0 && v.is_finite() => Ok(v),
        _ => Err("expected a finite number >= 2".into()),
    }
}

fn eta(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=0.25).contains(&v) => Ok(v),
        _ => Err("expected a number in [0, 0.25]".into()),
    }
}

fn jobs(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if (1..=256).contains(&v) => Ok(v),
        _ => Err("expected an integer in [1, 256]".into()),
    }
}

/// Everything that ends a run early.
enum Failure {
    Invalid(String),
    Verdicts,
}

impl From<rperim_core::error::Error> for Failure {
    fn from(e: rperim_core::error::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let verbose = cli.verbose;
    let out = run(cli);
    if verbose {
        eprintln!("elapsed {:.3}s", start.elapsed().as_secs_f64());
    }
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verdicts) => ExitCode::from(3),
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Perimeter { mask, r, window } => {
            need_file(&mask)?;
            let m = read_mask(&mask)?;
            let w = load_window(&window, &m)?;
            let per = perimeter_r(&m, &w, r)?;
            print_json(&json!({
                "per_r": per,
                "oscillation_cells": oscillation_count(&m, &w, r)?,
                "r": r,
                "h": m.geometry().spacing(),
            }))
        }
        Command::Energy { mask, field, r, window } => {
            need_file(&mask)?;
            need_file(&field)?;
            let m = read_mask(&mask)?;
            let g = read_field(&field)?;
            let w = load_window(&window, &m)?;
            print_json(&serde_json::to_value(energy(&m, &g, &w, r)?)?)
        }
        Command::Solve { spec, r, canonical, out } => solve_cmd(&spec, r, canonical, out.as_deref()),
        Command::Planelike { omega, m, r, h, eta, g, out } => {
            let out = prepare_out(out.as_deref())?;
            let forcing = match g.as_str() {
                "checkerboard" => PeriodicForcing::Checkerboard { eta },
                "zero" => PeriodicForcing::Zero,
                _ => return Err(Failure::Invalid(format!("--g: `{g}` is not checkerboard|zero"))),
            };
            let spec = StripSpec::new(rational_basis(&omega)?, m, r, h.unwrap_or(r / 5.0), forcing, eta)?;
            let o = construct_planelike(&spec)?;
            let width = json!({
                "omega": spec.direction.omega_int,
                "M": m,
                "r": r,
                "h": spec.h,
                "eta": eta,
                "width": o.width,
                "slab_width": o.slab_width,
                "wall": o.wall,
                "axis": o.axis,
                "energy": o.solver.energy.total,
                "sandwich_ok": o.sandwich_ok,
                "periodic_ok": o.periodic_ok,
                "birkhoff_ok": o.birkhoff_ok,
                "layers_ordered": o.layers_ordered,
                "colors_monotone": o.colors_monotone,
            });
            if let Some(dir) = out {
                write_mask(&dir.join("mask.pbm"), &o.mask)?;
                write_json(&dir.join("census.json"), &o.census)?;
                write_json(&dir.join("width.json"), &width)?;
            }
            print_json(&width)
        }
        Command::Experiment(args) => experiment_cmd(args, cli.verbose),
        Command::Convert { input, output, level } => convert_cmd(&input, &output, level),
        Command::Selftest { seed, jobs, out } => {
            let out = prepare_out(out.as_deref())?;
            let mut cfg = default_config("selftest")?;
            if let Some(s) = seed {
                cfg["seed"] = json!(s);
            }
            finish_report(run_named("selftest", cfg, jobs)?, out.as_deref(), cli.verbose)
        }
    }
}

fn need_file(p: &Path) -> Outcome {
    if p.is_file() {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("{} is not a readable file", p.display())))
    }
}

fn prepare_out(out: Option<&Path>) -> Result<Option<PathBuf>, Failure> {
    match out {
        None => Ok(None),
        Some(d) => {
            std::fs::create_dir_all(d)
                .map_err(|e| Failure::Invalid(format!("--out {}: {e}", d.display())))?;
            Ok(Some(d.to_path_buf()))
        }
    }
}

fn load_window(arg: &str, mask: &BinaryMask) -> Result<Window, Failure> {
    if arg == "full" {
        return Ok(Window::full(mask.geometry()));
    }
    let p = Path::new(arg);
    need_file(p)?;
    let w = read_mask(p)?;
    if w.geometry() != mask.geometry() {
        return Err(Failure::Invalid("--window: geometry differs from the mask".into()));
    }
    Ok(Window::from_mask(&w))
}

fn print_json(v: &Value) -> Outcome {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

/// Problem file for `solve`. Paths are relative to the file's directory.
#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    /// Mask holding the boundary data and its exterior rule.
    boundary: PathBuf,
    /// Free cells; defaults to the window eroded by `r`.
    #[serde(default)]
    free: Option<PathBuf>,
    /// Window cells; defaults to the whole grid.
    #[serde(default)]
    window: Option<PathBuf>,
    /// Constant or CSV field; defaults to zero.
    #[serde(default)]
    forcing: Option<ForcingSource>,
    #[serde(default)]
    r: Option<f64>,
    #[serde(default)]
    canonical: Option<Canonical>,
}

#[derive(Deserialize, Debug)]
#[serde(untagged)]
enum ForcingSource {
    Constant(f64),
    File(PathBuf),
}

fn solve_cmd(path: &Path, r: Option<f64>, canonical: Option<Canonical>, out: Option<&Path>) -> Outcome {
    need_file(path)?;
    let out = prepare_out(out)?;
    let pf: ProblemFile = serde_json::from_slice(&std::fs::read(path)?)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| base.join(p);
    let r = r
        .or(pf.r)
        .ok_or_else(|| Failure::Invalid("r: missing from both --r and the problem file".into()))?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Failure::Invalid(format!("r: {r} is not a finite number > 0")));
    }
    let canonical = canonical.or(pf.canonical).unwrap_or_default();

    let bpath = resolve(&pf.boundary);
    need_file(&bpath)?;
    let boundary = read_mask(&bpath)?;
    let geom = boundary.geometry().clone();
    let sub_mask = |p: &PathBuf, what: &str| -> Result<BinaryMask, Failure> {
        let full = resolve(p);
        need_file(&full)?;
        let m = read_mask(&full)?;
        if m.geometry() != &geom {
            return Err(Failure::Invalid(format!("{what}: geometry differs from the boundary mask")));
        }
        Ok(m)
    };
    let window = match &pf.window {
        Some(p) => Window::from_mask(&sub_mask(p, "window")?),
        None => Window::full(&geom),
    };
    let free = match &pf.free {
        Some(p) => sub_mask(p, "free")?.bits().clone(),
        None => {
            let omega = BinaryMask::from_bits(&geom, window.cells().clone(), ExtensionRule::ConstantOutside)?;
            erode(&omega, r)?.bits().clone()
        }
    };
    let g = match &pf.forcing {
        None => ScalarField::zeros(&geom),
        Some(ForcingSource::Constant(c)) => ScalarField::new(&geom, vec![*c; geom.len()], FieldExtension::Zero)?,
        Some(ForcingSource::File(p)) => {
            let full = resolve(p);
            need_file(&full)?;
            let f = read_field(&full)?;
            if f.geometry() != &geom {
                return Err(Failure::Invalid("forcing: geometry differs from the boundary mask".into()));
            }
            f
        }
    };
    let spec = DirichletSpec::new(window, free, boundary, g, r)?;
    let sol = solve(&spec, canonical)?;
    let mut v = serde_json::to_value(&sol)?;
    v["cells"] = json!(sol.mask.count());
    if let Some(dir) = out {
        write_mask(&dir.join("minimizer.pbm"), &sol.mask)?;
        write_json(&dir.join("result.json"), &v)?;
    }
    print_json(&v)
}

/// Sets `key` wherever it occurs in the config tree; false if it occurs nowhere.
fn override_key(v: &mut Value, key: &str, value: &Value) -> bool {
    let Value::Object(map) = v else {
        return false;
    };
    let mut hit = false;
    if let Some(slot) = map.get_mut(key) {
        *slot = value.clone();
        hit = true;
    }
    for (k, child) in map.iter_mut() {
        if k != key {
            hit |= override_key(child, key, value);
        }
    }
    hit
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, p) => *slot = p,
    }
}

fn experiment_cmd(args: ExperimentArgs, verbose: bool) -> Outcome {
    if !EXPERIMENTS.contains(&args.name.as_str()) {
        return Err(Failure::Invalid(format!(
            "experiment: `{}` is not one of {}",
            args.name,
            EXPERIMENTS.join(", ")
        )));
    }
    let mut cfg = default_config(&args.name)?;
    if let Some(p) = &args.spec {
        need_file(p)?;
        merge(&mut cfg, serde_json::from_slice(&std::fs::read(p)?)?);
    }
    let flags = [
        ("--r", "r", args.r.map(|v| json!(v))),
        ("--h", "h", args.h.map(|v| json!(v))),
        ("--M", "M", args.m.map(|v| json!(v))),
        ("--K", "K", args.k.map(|v| json!(v))),
        ("--eta", "eta", args.eta.map(|v| json!(v))),
        ("--seed", "seed", args.seed.map(|v| json!(v))),
    ];
    for (flag, key, value) in flags {
        if let Some(v) = value {
            if !override_key(&mut cfg, key, &v) {
                return Err(Failure::Invalid(format!("{flag}: not a parameter of experiment {}", args.name)));
            }
        }
    }
    if args.print_config {
        return print_json(&cfg);
    }
    let out = prepare_out(args.out.as_deref())?;
    finish_report(run_named(&args.name, cfg, args.jobs)?, out.as_deref(), verbose)
}

/// Prints the report without its samples, writes it in full, exits 3 on failures.
fn finish_report(report: Report, out: Option<&Path>, verbose: bool) -> Outcome {
    if let Some(dir) = out {
        report.write(dir)?;
    }
    for v in &report.verdicts {
        if verbose || !v.passed {
            eprintln!(
                "{} {}: observed {} (threshold {})",
                if v.passed { "PASS" } else { "FAIL" },
                v.name,
                v.observed,
                v.threshold
            );
        }
    }
    print_json(&json!({
        "name": report.name,
        "seed": report.seed,
        "passed": report.passed(),
        "summary": report.summary,
        "verdicts": report.verdicts,
    }))?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verdicts)
    }
}

fn kind(p: &Path) -> Option<&'static str> {
    match p.extension()?.to_str()? {
        "pbm" | "p4" => Some("mask"),
        "csv" => Some("field"),
        _ => None,
    }
}

fn convert_cmd(input: &Path, output: &Path, level: f64) -> Outcome {
    need_file(input)?;
    let (Some(from), Some(to)) = (kind(input), kind(output)) else {
        return Err(Failure::Invalid("convert: files must end in .pbm or .csv".into()));
    };
    match (from, to) {
        ("mask", "field") => {
            let m = read_mask(input)?;
            let ext = if matches!(m.extension(), ExtensionRule::Periodic) {
                FieldExtension::Periodic
            } else {
                FieldExtension::Zero
            };
            let values = (0..m.geometry().len()).map(|l| m.get(l) as u8 as f64).collect();
            write_field(output, &ScalarField::new(m.geometry(), values, ext)?)
        }
        ("field", "mask") => {
            let f = read_field(input)?;
            let ext = match f.extension() {
                FieldExtension::Periodic => ExtensionRule::Periodic,
                FieldExtension::Zero if 0.0 > level => ExtensionRule::ConstantInside,
                FieldExtension::Zero => ExtensionRule::ConstantOutside,
            };
            let cells: Vec<bool> = f.values().iter().map(|&v| v > level).collect();
            write_mask(output, &BinaryMask::from_bools(f.geometry(), &cells, ext)?)
        }
        ("mask", _) => write_mask(output, &read_mask(input)?),
        _ => write_field(output, &read_field(input)?),
    }?;
    Ok(())
}
