//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a stability check failed, 2 configuration or I/O
//! error. Diagnostics are one line on stderr; stdout stays empty.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, serialize_config};
use crate::error::{Error, Result};
use crate::experiment::{
    run_drift, run_fringe, run_verify_conditions, run_visibility_timeseries, ExperimentKind, Scenario, TimeSeries,
    VisibilityOutput,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub const CSV_HEADER: &str = "series_label,tick,time_seconds,value";

#[derive(Debug, Parser)]
#[command(name = "mzqkd", version, about = "Simulate polarization drift in a double Mach-Zehnder QKD link")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detector powers under thermal phase drift (drift.csv).
    Drift(RunArgs),
    /// Saw-tooth fringe and its envelope visibility (fringe.csv).
    Fringe(RunArgs),
    /// Visibility against channel length (visibility*.csv, visibility_summary.txt).
    Visibility(RunArgs),
    /// Stability-condition checks (verify_report.txt).
    Verify(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario TOML; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run this single seed instead of the configured seed list.
    #[arg(long)]
    seed: Option<u64>,
}

/// One resolved invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed_override: Option<u64>,
    pub experiment: ExperimentKind,
}

/// Loads the scenario for `manifest`: the file if given, else defaults, then
/// the seed override.
pub fn load_scenario(manifest: &RunManifest) -> Result<Scenario> {
    let mut scenario = match &manifest.config_path {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_config(&text, Some(manifest.experiment))?
        }
        None => Scenario::defaults(manifest.experiment),
    };
    if let Some(seed) = manifest.seed_override {
        scenario = scenario.with_seeds(vec![seed]);
    }
    Ok(scenario)
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text for `series`: one row per sample, sorted by label then tick.
pub fn render_csv(series: &[TimeSeries]) -> String {
    let mut sorted: Vec<&TimeSeries> = series.iter().collect();
    sorted.sort_by(|a, b| a.label.cmp(&b.label));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in sorted {
        for p in &s.samples {
            let _ = writeln!(out, "{},{},{},{}", s.label, p.tick, fmt_float(p.time_seconds), fmt_float(p.value));
        }
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn emit_csv(series: &[TimeSeries], path: &Path) -> Result<()> {
    write_file(path, &render_csv(series))
}

fn visibility_tables(out: &VisibilityOutput) -> (String, String, String) {
    let mut trials = String::from("length_km,seed,min,max,range,std,decorrelation_time_s\n");
    for t in &out.trials {
        let _ = writeln!(
            trials,
            "{},{},{},{},{},{},{}",
            t.length_km,
            t.seed,
            fmt_float(t.min),
            fmt_float(t.max),
            fmt_float(t.range),
            fmt_float(t.std),
            fmt_float(t.decorrelation_time_s)
        );
    }
    let mut lengths = String::from(
        "length_km,mean_range,min_range,max_range,mean_std,mean_decorrelation_time_s,mean_rate\n",
    );
    for l in &out.lengths {
        let _ = writeln!(
            lengths,
            "{},{},{},{},{},{},{}",
            l.length_km,
            fmt_float(l.mean_range),
            fmt_float(l.min_range),
            fmt_float(l.max_range),
            fmt_float(l.mean_std),
            fmt_float(l.mean_decorrelation_time_s),
            fmt_float(l.mean_rate)
        );
    }
    let summary = format!(
        "rate_spearman={}\nmax_unitarity_defect={}\n",
        fmt_float(out.rate_spearman),
        fmt_float(out.max_unitarity_defect)
    );
    (trials, lengths, summary)
}

/// Runs the experiment and writes its outputs. `Ok(false)` when a stability
/// check failed.
pub fn execute(manifest: &RunManifest) -> Result<bool> {
    let scenario = load_scenario(manifest)?;
    let dir = &manifest.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("config.toml"), &serialize_config(&scenario)?)?;
    eprintln!("mzqkd: running {}", manifest.experiment);
    match manifest.experiment {
        ExperimentKind::Drift => {
            let out = run_drift(&scenario)?;
            emit_csv(&out.series, &dir.join("drift.csv"))?;
        }
        ExperimentKind::Fringe => {
            let out = run_fringe(&scenario)?;
            emit_csv(&out.series, &dir.join("fringe.csv"))?;
        }
        ExperimentKind::VisibilityTimeseries => {
            let out = run_visibility_timeseries(&scenario)?;
            emit_csv(&out.series, &dir.join("visibility.csv"))?;
            let (trials, lengths, summary) = visibility_tables(&out);
            write_file(&dir.join("visibility_trials.csv"), &trials)?;
            write_file(&dir.join("visibility_lengths.csv"), &lengths)?;
            write_file(&dir.join("visibility_summary.txt"), &summary)?;
        }
        ExperimentKind::VerifyConditions => {
            let report = run_verify_conditions(&scenario)?;
            write_file(&dir.join("verify_report.txt"), &report.to_text())?;
            if !report.all_passed() {
                return Ok(false);
            }
        }
    }
    eprintln!("mzqkd: wrote {}", dir.display());
    Ok(true)
}

fn diagnostic(err: &Error) -> String {
    let class = match err {
        Error::ConfigParse { .. } | Error::ConfigValidation { .. } => "config",
        Error::Io { .. } => "io",
        _ => "run",
    };
    format!("mzqkd: error[{class}]: {err}").replace(['\n', '\r'], " ")
}

/// Runs `manifest` and maps the outcome to an exit code.
pub fn dispatch(manifest: &RunManifest) -> i32 {
    match execute(manifest) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("mzqkd: stability check failed, see verify_report.txt");
            EXIT_CHECK_FAILED
        }
        Err(e) => {
            eprintln!("{}", diagnostic(&e));
            EXIT_CONFIG
        }
    }
}

/// Parses `args` (including the program name) into a manifest.
pub fn parse_args<I, T>(args: I) -> std::result::Result<RunManifest, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let (experiment, a) = match cli.command {
        Command::Drift(a) => (ExperimentKind::Drift, a),
        Command::Fringe(a) => (ExperimentKind::Fringe, a),
        Command::Visibility(a) => (ExperimentKind::VisibilityTimeseries, a),
        Command::Verify(a) => (ExperimentKind::VerifyConditions, a),
    };
    Ok(RunManifest { config_path: a.config, output_dir: a.out, seed_override: a.seed, experiment })
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(args) {
        Ok(manifest) => dispatch(&manifest),
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            EXIT_OK
        }
        Err(e) => {
            let _ = e.print();
            EXIT_CONFIG
        }
    }
}
