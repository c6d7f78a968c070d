//! Command-line surface: `simulate`, `classify`, `calibrate`, `titrate`
//! and `validate`. Each command writes its outputs and a
//! [`RunManifest`] into `--out`.
//!
//! Exit codes: 0 success, 2 input error, 3 configuration error. Set
//! `PHYTOSIM_NO_COLOR` to disable ANSI colour.

mod manifest;
mod plot;

pub use manifest::{canonical_json, config_hash, InputFile, RunManifest};
pub use plot::{classification_svg, overlay_svg};

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{BufReader, IsTerminal};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    baseline_correct, classify_pipeline, fit_leak_decay, ArtifactConfig, ArtifactWindow, ClassificationResult,
    DielConfig, DielMetrics,
};
use crate::error::{Error, Result};
use crate::groundtruth::{
    dawn_dusk_delta, malic_acid_percent, parse_ground_truth_csv, parse_titration_csv, validate_inverse_relation,
    DayDelta, Phase,
};
use crate::ingest::{parse_log, serialize_canonical, LogFormat};
use crate::podsim::{load_scenario, simulate, LightSchedule, Scenario, TraceRecord};
use crate::series::SensorSeries;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const NO_COLOR_ENV: &str = "PHYTOSIM_NO_COLOR";

pub const TRACE_HEADER: &str =
    "timestamp_s,cam_weight,acid_pool_umol,clock_phase_h,soil_water,light_lux,openness,net_flux_umol_s,transpiration_mmol_s";

#[derive(Parser, Debug)]
#[command(name = "phytosim", version, about = "Leaf-pod CO2 simulation and diel pathway analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate plant, control and ambient sensors for one or more scenarios.
    Simulate {
        /// Scenario JSON; repeat for several runs (each gets a subdirectory).
        #[arg(long, required = true)]
        scenario: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's noise seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replace the scenario's light schedule.
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Scenarios simulated in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Classify a plant pod against its control into C3, CAM or Mixed cycles.
    Classify {
        plant: PathBuf,
        control: PathBuf,
        /// Light schedule JSON, or a scenario file whose schedule is used.
        #[arg(long)]
        schedule: PathBuf,
        /// Room sensor used alongside the control for artifact detection.
        #[arg(long)]
        ambient: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the leak rate of a pod from an injection or removal decay.
    Calibrate {
        decay: PathBuf,
        #[arg(long)]
        volume_cm3: f64,
        #[arg(long)]
        c_amb_ppm: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Malic acid content and dawn-dusk differences from titrations.
    Titrate {
        titration: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check reference assimilation against the pod CO2 slope.
    Validate {
        ground_truth: PathBuf,
        pod: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Maps an error to the documented exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_INPUT,
    }
}

fn color_enabled() -> bool {
    std::env::var_os(NO_COLOR_ENV).is_none() && std::io::stdout().is_terminal()
}

fn paint(text: &str, code: &str) -> String {
    if color_enabled() {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_owned()
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = exit_code(&e);
            let prefix = if std::env::var_os(NO_COLOR_ENV).is_none() && std::io::stderr().is_terminal() {
                "\x1b[31merror\x1b[0m"
            } else {
                "error"
            };
            eprintln!("{prefix}: {e}");
            code
        }
    }
}

pub fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Simulate { scenario, out, seed, schedule, jobs } => {
            cmd_simulate(scenario, out, *seed, schedule.as_deref(), *jobs)
        }
        Command::Classify { plant, control, schedule, ambient, out } => {
            cmd_classify(plant, control, schedule, ambient.as_deref(), out)
        }
        Command::Calibrate { decay, volume_cm3, c_amb_ppm, out } => cmd_calibrate(decay, *volume_cm3, *c_amb_ppm, out),
        Command::Titrate { titration, out } => cmd_titrate(titration, out),
        Command::Validate { ground_truth, pod, out } => cmd_validate(ground_truth, pod, out),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        Error::Json(j) => Error::Input(format!("{}: {j}", path.display())),
        Error::Input(m) => Error::Input(format!("{}: {m}", path.display())),
        other => Error::Input(format!("{}: {other}", path.display())),
    })
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    write(dir, name, serde_json::to_string_pretty(value)? + "\n")
}

fn write_manifest(dir: &Path, command: &str, config: &Value, seed: u64, inputs: &[&Path]) -> Result<()> {
    write_json(dir, "manifest.json", &RunManifest::new(command, config, seed, inputs)?)
}

/// Reads a canonical or logger CSV; the device id is the file stem.
pub fn read_series(path: &Path) -> Result<SensorSeries> {
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let file = std::fs::File::open(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    with_path(path, parse_log(BufReader::new(file), &LogFormat::canonical(id))).map(|p| p.series)
}

/// A light schedule from a schedule file or from any scenario file.
pub fn read_schedule(path: &Path) -> Result<LightSchedule> {
    let text = read(path)?;
    let value: Value = with_path(path, serde_json::from_str(&text).map_err(Error::from))?;
    if value.get("on_time").is_some() {
        let s: LightSchedule = with_path(path, serde_json::from_value(value).map_err(Error::from))?;
        with_path(path, s.validate())?;
        return Ok(s);
    }
    with_path(path, load_scenario(&text)).map(|sc| sc.schedule)
}

pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut s = format!("{TRACE_HEADER}\n");
    for r in trace {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.timestamp,
            r.state.cam_weight,
            r.state.acid_pool,
            r.state.clock_phase,
            r.state.soil_water,
            r.light,
            r.openness,
            r.net_flux,
            r.transpiration
        );
    }
    s
}

fn simulate_one(sc: &Scenario, dir: &Path, source: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let out = with_path(source, simulate(sc))?;
    write(dir, "plant.csv", serialize_canonical(&out.plant))?;
    write(dir, "control.csv", serialize_canonical(&out.control))?;
    write(dir, "ambient.csv", serialize_canonical(&out.ambient))?;
    write(dir, "trace.csv", trace_csv(&out.trace))?;
    write_json(dir, "schedule.json", &sc.schedule)?;
    write_json(dir, "scenario.json", sc)?;
    let title = format!("{}: plant pod CO2 and RH", source.file_stem().unwrap_or_default().to_string_lossy());
    write(dir, "overlay.svg", overlay_svg(&out.plant, &sc.schedule, &title))?;
    write_manifest(dir, "simulate", &serde_json::to_value(sc)?, sc.rng_seed, &[source])?;
    println!("simulated {} -> {}", source.display(), dir.display());
    Ok(())
}

fn cmd_simulate(paths: &[PathBuf], out: &Path, seed: Option<u64>, schedule: Option<&Path>, jobs: usize) -> Result<()> {
    let schedule = schedule.map(read_schedule).transpose()?;
    let mut runs = Vec::new();
    for path in paths {
        let mut sc = with_path(path, load_scenario(&read(path)?))?;
        if let Some(s) = seed {
            sc.rng_seed = s;
        }
        if let Some(s) = &schedule {
            sc.schedule = s.clone();
        }
        with_path(path, sc.validate())?;
        let dir = if paths.len() == 1 {
            out.to_path_buf()
        } else {
            out.join(path.file_stem().unwrap_or_default())
        };
        runs.push((sc, dir, path.clone()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} jobs: {e}")))?;
    pool.install(|| runs.par_iter().map(|(sc, dir, src)| simulate_one(sc, dir, src)).collect::<Result<Vec<()>>>())?;
    Ok(())
}

/// JSON document written by `classify`.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub classification: ClassificationResult,
    pub metrics: Vec<DielMetrics>,
    pub artifacts: Vec<ArtifactWindow>,
    pub config: DielConfig,
}

pub fn cycles_csv(metrics: &[DielMetrics], result: &ClassificationResult) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut s = String::from(
        "cycle_index,start_s,end_s,day_drawdown_ppm,night_drawdown_ppm,amplitude_ppm,D,humidity_phase_corr,artifact_flagged,label\n",
    );
    for (m, c) in metrics.iter().zip(&result.per_cycle) {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            m.cycle_index,
            m.start,
            m.end,
            m.day_drawdown,
            m.night_drawdown,
            m.amplitude,
            opt(m.day_fraction_index),
            opt(m.humidity_phase_corr),
            m.artifact_flagged,
            c.label
        );
    }
    s
}

fn cmd_classify(plant: &Path, control: &Path, schedule: &Path, ambient: Option<&Path>, out: &Path) -> Result<()> {
    let plant_s = read_series(plant)?;
    let control_s = read_series(control)?;
    let ambient_s = ambient.map(read_series).transpose()?;
    let sched = read_schedule(schedule)?;
    let cfg = DielConfig::default();
    let (metrics, artifacts, result) = classify_pipeline(&plant_s, &control_s, ambient_s.as_ref(), &sched, &cfg)?;
    let corrected = baseline_correct(&plant_s, &control_s)?;
    std::fs::create_dir_all(out)?;
    let title = format!("{}: {} (confidence {:.2})", plant_s.channel_id, result.overall, result.confidence);
    write(out, "classification.svg", classification_svg(&corrected, &sched, &metrics, &result, &artifacts, &title))?;
    write(out, "cycles.csv", cycles_csv(&metrics, &result))?;
    let report = ClassifyReport { classification: result, metrics, artifacts, config: cfg };
    write_json(out, "report.json", &report)?;
    let config = json!({ "schedule": sched, "diel": cfg, "artifacts": ArtifactConfig::default() });
    let mut inputs = vec![plant, control, schedule];
    inputs.extend(ambient);
    write_manifest(out, "classify", &config, 0, &inputs)?;

    let r = &report.classification;
    println!(
        "overall: {} (confidence {:.2}) over {} cycles",
        paint(&r.overall.to_string(), "1"),
        r.confidence,
        r.per_cycle.len()
    );
    for t in &r.transitions {
        println!("transition at cycle {}: {} -> {}", t.cycle_index, t.from, t.to);
    }
    if !report.artifacts.is_empty() {
        println!("{} artifact window(s) flagged", report.artifacts.len());
    }
    Ok(())
}

fn cmd_calibrate(decay: &Path, volume: f64, c_amb: f64, out: &Path) -> Result<()> {
    let series = read_series(decay)?;
    let fit = fit_leak_decay(&series, c_amb, volume)?;
    std::fs::create_dir_all(out)?;
    let report = json!({
        "fit": fit,
        "time_constant_s": 1.0 / fit.k,
        "volume_cm3": volume,
        "c_amb_ppm": c_amb,
    });
    write_json(out, "calibration.json", &report)?;
    write_manifest(out, "calibrate", &json!({ "volume_cm3": volume, "c_amb_ppm": c_amb }), 0, &[decay])?;
    println!(
        "k = {:.4e} s^-1, g_leak = {:.4} cm3/s, r2 = {:.4}",
        fit.k, fit.g_leak, fit.r_squared
    );
    if fit.low_quality {
        println!("{}", paint("warning: r2 below 0.9, fit is low quality", "33"));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct TitrationRow {
    sample_time: i64,
    phase: Phase,
    malic_acid_percent: f64,
}

fn cmd_titrate(path: &Path, out: &Path) -> Result<()> {
    let records = with_path(path, parse_titration_csv(&read(path)?))?;
    let mut rows = Vec::new();
    for r in &records {
        let reading = with_path(path, malic_acid_percent(r))?;
        rows.push(TitrationRow { sample_time: r.sample_time, phase: r.phase, malic_acid_percent: reading.percent });
    }
    let days = dawn_dusk_delta(&records)?;
    std::fs::create_dir_all(out)?;
    write_json(out, "titration.json", &json!({ "records": rows, "days": days.days, "warnings": days.warnings }))?;
    write_manifest(out, "titrate", &json!({ "m_malic": crate::groundtruth::MALIC_ACID_MOLAR_MASS }), 0, &[path])?;
    for row in &rows {
        println!("{} {}: {:.5} %", row.sample_time, row.phase, row.malic_acid_percent);
    }
    for DayDelta { day, delta, .. } in &days.days {
        println!("day {day}: dawn - dusk = {delta:+.5} %");
    }
    for w in &days.warnings {
        println!("{}", paint(&format!("warning: {w}"), "33"));
    }
    Ok(())
}

fn cmd_validate(gt: &Path, pod: &Path, out: &Path) -> Result<()> {
    let records = with_path(gt, parse_ground_truth_csv(&read(gt)?))?;
    let pod_s = read_series(pod)?;
    let rel = validate_inverse_relation(&records, &pod_s)?;
    std::fs::create_dir_all(out)?;
    write_json(out, "validation.json", &rel)?;
    let config = json!({
        "smoothing_min": crate::groundtruth::SMOOTHING_MIN,
        "pairing_tolerance_s": crate::groundtruth::PAIRING_TOLERANCE_S,
        "pass_threshold": crate::groundtruth::PASS_THRESHOLD,
    });
    write_manifest(out, "validate", &config, 0, &[gt, pod])?;
    let line = rel.to_string();
    println!("{}", if rel.pass { paint(&line, "32") } else { paint(&line, "31") });
    Ok(())
}
