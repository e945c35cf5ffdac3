//! `qmimo` command-line front end.
//!
//! Subcommands: `calibrate`, `simulate`, `sweep`, `power`. Exit status is 0 on success,
//! 1 for invalid input, 2 for calibration or simulation failures and 3 for I/O errors.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::calibration::{
    calibrate_table, calibration_to_text, load_calibration_checked, BackoffCalibration,
    InfeasiblePolicy, BUNDLED_TABLE,
};
use crate::power::{adc_power, energy_efficiency, total_power};
use crate::sweep::{
    degradation_factor, find_optimal_b, find_optimal_training, run_sweep, Param, Preset,
};
use crate::uplink::ergodic_sumrate;
use crate::{Error, Result};
use config::{load_config, parse_receivers, RunConfig};
use output::{
    degradation_table, manifest_path, optimum_table, sha256_hex, unix_now, write_csv, CsvRow,
    RunManifest,
};

#[derive(Debug, Parser)]
#[command(
    name = "qmimo",
    version,
    about = "Energy efficiency of massive-MIMO uplink with low-resolution ADCs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate the AGC backoff per resolution and write a calibration table.
    Calibrate(CalibrateArgs),
    /// Run one configuration and print sumrate, power and energy efficiency.
    Simulate(RunArgs),
    /// Run a parameter sweep and write a results CSV.
    Sweep(SweepArgs),
    /// Print the ADC power model over a range of resolutions.
    Power(PowerArgs),
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub b_min: Option<u32>,
    #[arg(long)]
    pub b_max: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub criterion_db: Option<f64>,
    /// Number of Gaussian samples; scientific notation such as `1e7` is accepted.
    #[arg(long)]
    pub samples: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Fail on any resolution that misses the criterion, including b = 1.
    #[arg(long)]
    pub strict: bool,
    #[arg(long, default_value = "calibration.txt")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Calibration table; overrides the configuration file.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// `pqn` or `hardware`.
    #[arg(long)]
    pub mode: Option<String>,
    /// `mrc`, `zf` or `both`.
    #[arg(long)]
    pub receiver: Option<String>,
    /// Results CSV. A manifest is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// `fig4`, `fig5` or `fig6`.
    #[arg(long, conflicts_with = "figure")]
    pub preset: Option<String>,
    /// Same as `--preset fig<N>`.
    #[arg(long)]
    pub figure: Option<String>,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub b_min: u32,
    #[arg(long, default_value_t = 16)]
    pub b_max: u32,
    /// Sampling rate in Hz.
    #[arg(long, alias = "fs")]
    pub sampling_rate: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    /// Antennas `M` for the `2M P_ADC` column.
    #[arg(long, alias = "m")]
    pub antennas: Option<usize>,
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_)
        | Error::InvalidState(_)
        | Error::DimensionMismatch(_)
        | Error::Parse { .. } => 1,
        Error::CalibrationFailure { .. }
        | Error::SingularChannel { .. }
        | Error::SimulationFailure(_) => 2,
        Error::Io { .. } => 3,
    }
}

/// Binary entry point.
pub fn main() -> ExitCode {
    let code = run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(code)
}

/// Parses `args` (program name first) and runs the command, returning the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Calibrate(a) => cmd_calibrate(&a, out, err),
        Command::Simulate(a) => cmd_simulate(&a, out, err),
        Command::Sweep(a) => cmd_sweep(&a, out, err),
        Command::Power(a) => cmd_power(&a, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn io_out(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn load_or_default(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(RunConfig::default()),
    }
}

pub fn cmd_calibrate(a: &CalibrateArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<()> {
    let cfg = load_or_default(&a.config)?;
    let mut settings = cfg.calibration_settings()?;
    if let Some(v) = a.b_min {
        settings.b_min = v;
    }
    if let Some(v) = a.b_max {
        settings.b_max = v;
    }
    if let Some(v) = a.criterion_db {
        settings.criterion_db = v;
    }
    if let Some(v) = a.samples {
        if !(v >= 1.0) || v.fract() != 0.0 || v > 1e12 {
            return Err(Error::invalid(format!(
                "--samples must be a positive integer, got {v}"
            )));
        }
        settings.n_samples = v as usize;
    }
    if let Some(v) = a.seed {
        settings.seed = v;
    }
    if let Some(v) = a.grid_points {
        settings.search.grid_points = v;
    }
    if a.strict {
        settings.policy = InfeasiblePolicy::Strict;
    }
    let mut calib = calibrate_table(&settings)?;
    calib.created = Some(format!("unix:{}", unix_now()));
    std::fs::write(&a.out, calibration_to_text(&calib)).map_err(|e| Error::io(&a.out, e))?;

    writeln!(
        out,
        "{:>3} {:>10} {:>14} {:>10}",
        "b", "mu*", "deviation_dB", "rho_xq"
    )
    .map_err(io_out)?;
    for (b, e) in &calib.entries {
        let flag = if e.deviation_db <= calib.criterion_db {
            ""
        } else {
            "  (criterion not met)"
        };
        writeln!(
            out,
            "{b:>3} {:>10.4} {:>14.3} {:>10.5}{flag}",
            e.mu_star, e.deviation_db, e.rho_xq
        )
        .map_err(io_out)?;
    }
    writeln!(
        out,
        "chord: mu(b) = {} * b + {}\nwrote {}",
        calib.chord_slope,
        calib.chord_intercept,
        a.out.display()
    )
    .map_err(io_out)
}

/// Configuration, calibration and provenance shared by `simulate` and `sweep`.
struct Loaded {
    cfg: RunConfig,
    calib: BackoffCalibration,
    calib_source: String,
    calib_sha: String,
    workers: usize,
}

fn load_run(a: &RunArgs, err: &mut dyn Write) -> Result<Loaded> {
    let mut cfg = load_or_default(&a.config)?;
    if let Some(p) = &a.calibration {
        cfg.calibration.path = Some(p.clone());
    }
    if let Some(s) = a.seed {
        cfg.system.seed = s;
    }
    if let Some(t) = a.trials {
        cfg.system.trials = t;
    }
    if let Some(m) = &a.mode {
        cfg.system.mode = m.to_ascii_lowercase();
    }
    if let Some(r) = &a.receiver {
        parse_receivers(r)?;
        cfg.system.receiver = r.to_ascii_lowercase();
    }
    let (calib, calib_source, calib_sha) = match &cfg.calibration.path {
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
            let (calib, warnings) = load_calibration_checked(p, cfg.calibration.criterion_db)?;
            for w in warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            (calib, p.display().to_string(), sha256_hex(&bytes))
        }
        None => (
            BackoffCalibration::bundled(),
            "bundled".to_string(),
            sha256_hex(BUNDLED_TABLE.as_bytes()),
        ),
    };
    let workers = match a.workers {
        Some(0) => return Err(Error::invalid("--workers must be >= 1")),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    if let Some(w) = cfg.adc_params().validity_warning() {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(Loaded {
        cfg,
        calib,
        calib_source,
        calib_sha,
        workers,
    })
}

/// Warns when the chord is used outside the resolutions it was calibrated on.
fn warn_extrapolation(
    calib: &BackoffCalibration,
    bits: impl IntoIterator<Item = u32>,
    err: &mut dyn Write,
) {
    let outside: Vec<String> = bits
        .into_iter()
        .filter(|b| !(calib.b_min..=calib.b_max).contains(b))
        .map(|b| b.to_string())
        .collect();
    if !outside.is_empty() {
        let _ = writeln!(
            err,
            "warning: b = {} outside the calibrated range [{}, {}]; backoff extrapolated from the chord",
            outside.join(", "),
            calib.b_min,
            calib.b_max
        );
    }
}

fn write_manifest(
    command: &str,
    a: &RunArgs,
    l: &Loaded,
    results: Vec<(PathBuf, Vec<u8>)>,
    started: u64,
) -> Result<()> {
    let Some(main) = results.first().map(|(p, _)| p.clone()) else {
        return Ok(());
    };
    let m = RunManifest {
        command: command.into(),
        config_path: a.config.clone(),
        config_toml: l.cfg.to_toml(),
        calibration_source: l.calib_source.clone(),
        calibration_sha256: l.calib_sha.clone(),
        seed: l.cfg.system.seed,
        workers: l.workers,
        results: results
            .iter()
            .map(|(p, bytes)| (p.clone(), sha256_hex(bytes)))
            .collect(),
        started_unix: started,
        finished_unix: unix_now(),
    };
    m.write(&manifest_path(&main))
}

pub fn cmd_simulate(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let started = unix_now();
    let l = load_run(a, err)?;
    let problems = l.cfg.violations(&l.calib);
    if !problems.is_empty() {
        for p in &problems {
            let _ = writeln!(err, "error: {p}");
        }
        return Err(Error::invalid(format!(
            "{} configuration problem(s)",
            problems.len()
        )));
    }
    warn_extrapolation(&l.calib, [l.cfg.system.b], err);
    let params = l.cfg.adc_params();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(l.workers)
        .build()
        .map_err(|e| Error::SimulationFailure(e.to_string()))?;
    let mut rows = Vec::new();
    for rx in l.cfg.receivers()? {
        let ucfg = l.cfg.uplink(rx, &l.calib)?;
        let rate =
            pool.install(|| ergodic_sumrate(&ucfg, l.cfg.system.trials, l.cfg.system.seed))?;
        let budget = total_power(
            ucfg.m,
            ucfg.b,
            l.cfg.power.alpha,
            &params,
            l.cfg.power.b_ref,
        )?;
        let eff = energy_efficiency(rate.sumrate, &budget)?;
        writeln!(
            out,
            "receiver {rx}: M={} K={} T={} tau={} b={} snr_db={} mu={:.4} mode={}",
            ucfg.m,
            ucfg.k,
            ucfg.coherence,
            ucfg.tau,
            ucfg.b,
            l.cfg.system.snr_db,
            ucfg.mu(),
            ucfg.mode
        )
        .map_err(io_out)?;
        writeln!(out, "  C     = {:.6e} bit/s", eff.sumrate).map_err(io_out)?;
        writeln!(out, "  P_tot = {:.6e} W", eff.p_tot).map_err(io_out)?;
        writeln!(out, "  eta   = {:.6e} bit/J", eff.eta).map_err(io_out)?;
        writeln!(
            out,
            "  trials used {} discarded {}",
            rate.trials_used, rate.trials_discarded
        )
        .map_err(io_out)?;
        let sinqr: Vec<String> = rate.mean_sinqr.iter().map(|s| format!("{s:.4}")).collect();
        writeln!(out, "  mean SINQR per user: {}", sinqr.join(" ")).map_err(io_out)?;
        rows.push(CsvRow {
            receiver: rx.to_string(),
            b: ucfg.b,
            m: ucfg.m,
            k: ucfg.k,
            t: ucfg.coherence,
            tau: ucfg.tau,
            snr_db: l.cfg.system.snr_db,
            alpha: l.cfg.power.alpha,
            sumrate: eff.sumrate,
            p_tot: eff.p_tot,
            eta: eff.eta,
            trials_used: rate.trials_used,
            trials_discarded: rate.trials_discarded,
            status: "ok".into(),
        });
    }
    if let Some(path) = &a.out {
        let bytes = write_csv(path, &rows)?;
        write_manifest("simulate", a, &l, vec![(path.clone(), bytes)], started)?;
    }
    Ok(())
}

/// `<stem>.<suffix>` next to `path`.
fn companion(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let started = unix_now();
    let mut l = load_run(&a.run, err)?;
    let preset = match (&a.preset, &a.figure) {
        (Some(p), _) | (None, Some(p)) => Some(p.parse::<Preset>()?),
        (None, None) => None,
    };
    let mut spec = l.cfg.sweep_spec(&l.calib)?;
    if let Some(r) = &a.run.receiver {
        spec.receivers = parse_receivers(r)?;
    }
    if let Some(p) = preset {
        spec = p.apply(spec);
    }
    spec.validate()?;
    let mut bits: Vec<u32> = spec
        .axes
        .iter()
        .filter(|a| a.param == Param::B)
        .flat_map(|a| a.values.iter().map(|&v| v as u32))
        .chain(
            spec.fixed
                .iter()
                .filter(|f| f.0 == Param::B)
                .map(|f| f.1 as u32),
        )
        .collect();
    bits.sort_unstable();
    bits.dedup();
    warn_extrapolation(&l.calib, bits, err);
    // Record the grid actually run so the manifest reproduces it without the preset.
    l.cfg.set_sweep(&spec);

    let records = run_sweep(&spec, l.workers)?;
    let failed = records.iter().filter(|r| !r.status.is_ok()).count();
    let path = a
        .run
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let rows: Vec<CsvRow> = records.iter().map(CsvRow::from).collect();
    let bytes = write_csv(&path, &rows)?;
    let mut files = vec![(path.clone(), bytes)];
    writeln!(
        out,
        "{} records ({} failed) written to {}",
        records.len(),
        failed,
        path.display()
    )
    .map_err(io_out)?;

    if let Some(p) = preset {
        let keys = p.group_keys();
        let mut emit = |suffix: &str, text: String, out: &mut dyn Write| -> Result<()> {
            let f = companion(&path, suffix);
            std::fs::write(&f, &text).map_err(|e| Error::io(&f, e))?;
            writeln!(out, "{}:\n{text}", f.display()).map_err(io_out)?;
            files.push((f, text.into_bytes()));
            Ok(())
        };
        match p {
            Preset::Fig4 => {
                let opt = find_optimal_b(&records, &keys)?;
                emit("fig4_bstar.tsv", optimum_table(&keys, "b_star", &opt), out)?;
            }
            Preset::Fig5 => {
                let opt = find_optimal_b(&records, &keys)?;
                emit("fig5_bstar.tsv", optimum_table(&keys, "b_star", &opt), out)?;
                let zf: Vec<_> = records
                    .iter()
                    .filter(|r| r.receiver == crate::uplink::Receiver::Zf)
                    .cloned()
                    .collect();
                if !zf.is_empty() {
                    let f = degradation_factor(&zf, &keys)?;
                    emit("fig5_degradation.tsv", degradation_table(&keys, &f), out)?;
                }
            }
            Preset::Fig6 => {
                let opt = find_optimal_training(&records, &keys)?;
                emit(
                    "fig6_tau_star.tsv",
                    optimum_table(&keys, "tau_over_T_star", &opt),
                    out,
                )?;
            }
        }
    }
    write_manifest("sweep", &a.run, &l, files, started)?;
    if failed > 0 {
        let _ = writeln!(
            err,
            "warning: {failed} grid points failed; see the status column"
        );
    }
    Ok(())
}

pub fn cmd_power(a: &PowerArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = load_or_default(&a.config)?;
    let mut params = cfg.adc_params();
    if let Some(f) = a.sampling_rate {
        params.f_s = f;
    }
    if let Some(o) = a.omega {
        params.omega = o;
    }
    params.validate()?;
    if a.b_min < 1 || a.b_max < a.b_min || a.b_max > crate::quantizer::MAX_BITS {
        return Err(Error::invalid(format!(
            "resolution range must satisfy 1 <= b_min <= b_max <= 30, got [{}, {}]",
            a.b_min, a.b_max
        )));
    }
    let m = a.antennas.unwrap_or(cfg.system.m);
    if m < 1 {
        return Err(Error::invalid("antenna count must be >= 1"));
    }
    if let Some(w) = params.validity_warning() {
        let _ = writeln!(err, "warning: {w}");
    }
    writeln!(
        out,
        "# f_s = {} Hz, Omega = {}, M = {}",
        params.f_s, params.omega, m
    )
    .map_err(io_out)?;
    writeln!(out, "b\tP_ADC_W\ttotal_2M_P_ADC_W").map_err(io_out)?;
    for b in a.b_min..=a.b_max {
        let p = adc_power(b, &params)?;
        writeln!(out, "{b}\t{p:.6e}\t{:.6e}", 2.0 * m as f64 * p).map_err(io_out)?;
    }
    Ok(())
}
