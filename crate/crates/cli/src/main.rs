//! `cvqkd`: key rates, sweeps, noise and distance limits, and shot-level
//! emulation for two-way CV-QKD with measurement-based Gaussian operations.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

mod config;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvqkd::analysis::{max_distance, sweep, tolerable_epsilon, write_sweep_csv, Axis, Quantity, SweepSpec, VaRule};
use cvqkd::protocols::{build_het2m_closed_form, key_rate_with};
use cvqkd::sampler::{key_rate_from_samples, sample_shots, write_shots_csv};
use cvqkd::{Error, Result, Variant};

use config::{parse_range, parse_va_rule, Merged, ScenarioArgs};

#[derive(Parser)]
#[command(name = "cvqkd", version, about = "Gaussian security analysis of two-way CV-QKD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Key rate of one scenario.
    Keyrate(KeyrateArgs),
    /// One-dimensional parameter sweep written as CSV.
    Sweep(SweepArgs),
    /// Largest excess noise with a positive key rate at a given distance.
    TolerableNoise(RootArgs),
    /// Distance at which the key rate reaches zero.
    MaxDistance(RootArgs),
    /// Sample a Het2M measurement record and estimate the key rate from it.
    Emulate(EmulateArgs),
}

#[derive(Args)]
struct KeyrateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Symplectic spectrum method: generic or quartic.
    #[arg(long)]
    method: Option<String>,
    /// Also write the report as one-row CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated variants (default: --variant).
    #[arg(long, value_delimiter = ',')]
    variants: Vec<String>,
    /// distance_km, epsilon, beta or T_A.
    #[arg(long)]
    axis: Option<String>,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "range")]
    grid: Option<Vec<f64>>,
    /// Evenly spaced grid as start:stop:count.
    #[arg(long)]
    range: Option<String>,
    /// key_rate, tolerable_epsilon or max_distance.
    #[arg(long)]
    quantity: Option<String>,
    /// fixed, or coupler_scaled for V_A = V / (1 - T_A).
    #[arg(long)]
    va_rule: Option<String>,
    /// CSV destination (default: stdout).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RootArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Args)]
struct EmulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Number of shots.
    #[arg(long)]
    n_shots: Option<usize>,
    /// Seed for sampling and bootstrap.
    #[arg(long, env = "CVQKD_SEED")]
    seed: Option<u64>,
    /// Shot record CSV.
    #[arg(long)]
    shots_output: Option<PathBuf>,
    /// Estimated covariance matrix CSV.
    #[arg(long)]
    estimate_output: Option<PathBuf>,
    /// One-row report CSV.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

const DEFAULT_SHOTS: usize = 1_000_000;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("cannot create {}: {e}", path.display())))
}

fn warn(w: &impl std::fmt::Display) {
    eprintln!("warning: {w}");
}

fn keyrate(a: &KeyrateArgs) -> Result<()> {
    let m = Merged::new(&a.scenario)?;
    let s = m.scenario(true)?;
    let method = m.method(a.method.as_deref())?;
    let r = key_rate_with(&s, method)?;
    report::rate_text(&r, io::stdout().lock())?;
    if let Some(p) = a.csv.as_ref().or(m.file.output.as_ref()) {
        let mut w = create(p)?;
        report::rate_csv(&r, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn sweep_cmd(a: &SweepArgs) -> Result<()> {
    let m = Merged::new(&a.scenario)?;
    let f = &m.file;
    let names: Vec<String> = if !a.variants.is_empty() {
        a.variants.clone()
    } else if let Some(v) = &f.variants {
        v.clone()
    } else {
        vec![m.variant()?.as_str().to_string()]
    };
    let variants = names.iter().map(|v| v.parse()).collect::<Result<Vec<Variant>>>()?;
    let axis: Axis = a.axis.as_deref().or(f.axis.as_deref()).ok_or_else(|| Error::Domain("--axis is required".into()))?.parse()?;
    let grid = match (&a.grid, &a.range, &f.grid, &f.range) {
        (Some(g), _, _, _) => g.clone(),
        (None, Some(r), _, _) => parse_range(r)?,
        (None, None, Some(g), None) => g.clone(),
        (None, None, None, Some(r)) => parse_range(r)?,
        (None, None, Some(_), Some(_)) => return Err(Error::Domain("config sets both grid and range; keep one".into())),
        (None, None, None, None) => return Err(Error::Domain("--grid or --range is required".into())),
    };
    let quantity: Quantity = a.quantity.as_deref().or(f.quantity.as_deref()).unwrap_or("key_rate").parse()?;
    let va_rule = match a.va_rule.as_deref().or(f.va_rule.as_deref()) {
        Some(r) => parse_va_rule(r)?,
        None => VaRule::Fixed,
    };
    // along the distance axis, and for max-distance, the channel comes from the grid
    let need_channel = axis != Axis::DistanceKm && quantity != Quantity::MaxDistance;
    let mut base = m.scenario(need_channel && m.dist().is_none())?;
    base.variant = variants[0];
    let distance_km = if axis == Axis::DistanceKm { None } else { m.dist() };
    let spec = SweepSpec { variants, axis, grid, quantity, base, distance_km, loss_db_per_km: m.loss()?, va_rule };
    spec.validate()?;
    let output = a.output.clone().or_else(|| f.output.clone());
    let rows = sweep(&spec)?;
    for r in &rows {
        if let cvqkd::analysis::RowStatus::Error(msg) = &r.status {
            eprintln!("warning: {} {}={}: {msg}", r.variant, r.axis, report::num(r.value));
        }
    }
    match output {
        Some(p) => {
            let mut w = create(&p)?;
            write_sweep_csv(&rows, quantity, &mut w)?;
            w.flush()?;
        }
        None => write_sweep_csv(&rows, quantity, io::stdout().lock())?,
    }
    Ok(())
}

fn tolerable_noise(a: &RootArgs) -> Result<()> {
    let m = Merged::new(&a.scenario)?;
    let d = m.dist().ok_or_else(|| Error::Domain("tolerable-noise needs --dist".into()))?;
    let s = m.scenario(true)?;
    let r = tolerable_epsilon(&s, d, m.loss()?)?;
    r.warnings.iter().for_each(warn);
    report::root_text("eps_star", &r, io::stdout().lock())
}

fn max_distance_cmd(a: &RootArgs) -> Result<()> {
    let m = Merged::new(&a.scenario)?;
    let s = m.scenario(false)?;
    let r = max_distance(&s, m.loss()?)?;
    r.warnings.iter().for_each(warn);
    report::root_text("d_star", &r, io::stdout().lock())
}

fn emulate(a: &EmulateArgs) -> Result<()> {
    let m = Merged::new(&a.scenario)?;
    let s = m.scenario(true)?;
    if s.variant != Variant::Het2M {
        return Err(Error::Domain(format!("emulate supports het2m only, got {}", s.variant)));
    }
    let n = a.n_shots.or(m.file.n_shots).unwrap_or(DEFAULT_SHOTS);
    if n < cvqkd::sampler::MIN_SHOTS {
        return Err(Error::InsufficientData(format!(
            "n_shots must be at least {}, got {n}",
            cvqkd::sampler::MIN_SHOTS
        )));
    }
    let seed = a.seed.or(m.file.seed).unwrap_or(0);
    let set = sample_shots(&build_het2m_closed_form(&s)?, n, seed)?;
    if let Some(p) = a.shots_output.as_ref().or(m.file.shots_output.as_ref()) {
        let mut w = create(p)?;
        write_shots_csv(&set, &mut w)?;
        w.flush()?;
    }
    let r = key_rate_from_samples(&set.shots, &s, seed)?;
    r.warnings.iter().for_each(warn);
    report::sampled_text(&r, seed, io::stdout().lock())?;
    if let Some(p) = a.estimate_output.as_ref().or(m.file.estimate_output.as_ref()) {
        let mut w = create(p)?;
        r.estimate.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(p) = a.output.as_ref().or(m.file.output.as_ref()) {
        let mut w = create(p)?;
        report::sampled_csv(&r, seed, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Keyrate(a) => keyrate(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::TolerableNoise(a) => tolerable_noise(a),
        Command::MaxDistance(a) => max_distance_cmd(a),
        Command::Emulate(a) => emulate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
