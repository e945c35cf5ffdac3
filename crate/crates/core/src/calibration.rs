//! AGC input-backoff calibration.
//!
//! For each resolution `b` the calibrator looks for the smallest backoff `mu` at which the
//! measured distortion variance deviates from the PQN variance by at most `criterion_db`
//! (default -13 dB). The per-`b` optimum `mu*(b)` is then replaced by the chord through the
//! two endpoint samples, `mu_l(b) = slope * b + intercept`, which is what the uplink
//! simulator uses to set the AGC gain.
//!
//! A 1-bit quantizer cannot meet -13 dB for Gaussian inputs at any backoff: its distortion
//! `1/4 - s sqrt(2/pi) + s^2` bottoms out at `s^2 = 1/(2 pi)`, about 10.4 dB above the PQN
//! variance. [`InfeasiblePolicy`] decides what happens in that case.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::quantizer::{DistortionStats, GaussianSamples, MIN_SAMPLES};
use crate::{Error, Result};

/// Text of the bundled calibration table.
pub const BUNDLED_TABLE: &str = include_str!("../data/calibration_default.txt");

pub const DEFAULT_CRITERION_DB: f64 = -13.0;
pub const DEFAULT_SAMPLES: usize = 10_000_000;
pub const DEFAULT_SEED: u64 = 7;

/// Relative bracket width at which bisection stops.
const REFINE_TOL: f64 = 1e-3;

/// Logarithmic grid of candidate backoffs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchGrid {
    pub mu_min: f64,
    pub mu_max: f64,
    pub grid_points: usize,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            mu_min: 0.5,
            mu_max: 64.0,
            grid_points: 64,
        }
    }
}

impl SearchGrid {
    fn validate(&self) -> Result<()> {
        if !(self.mu_min > 0.0) || !(self.mu_max > self.mu_min) || !self.mu_max.is_finite() {
            return Err(Error::invalid(format!(
                "search bracket must satisfy 0 < mu_min < mu_max, got [{}, {}]",
                self.mu_min, self.mu_max
            )));
        }
        if self.grid_points < 16 {
            return Err(Error::invalid(format!(
                "search grid needs at least 16 points, got {}",
                self.grid_points
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.grid_points;
        let ratio = (self.mu_max / self.mu_min).ln();
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.mu_max
                } else {
                    self.mu_min * (ratio * i as f64 / (n - 1) as f64).exp()
                }
            })
            .collect()
    }
}

/// What to do when no backoff on the grid meets the criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InfeasiblePolicy {
    /// Fail for every resolution.
    Strict,
    /// Use the deviation-minimising backoff for `b = 1` only; fail otherwise.
    #[default]
    OneBitFallback,
    /// Use the deviation-minimising backoff wherever the criterion cannot be met.
    BestEffort,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationEntry {
    pub mu_star: f64,
    pub deviation_db: f64,
    pub rho_xq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackoffCalibration {
    pub entries: BTreeMap<u32, CalibrationEntry>,
    pub chord_slope: f64,
    pub chord_intercept: f64,
    pub b_min: u32,
    pub b_max: u32,
    pub criterion_db: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Free-form creation stamp written by the CLI; ignored by everything else.
    pub created: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationWarning {
    CriterionMismatch { requested_db: f64, stored_db: f64 },
}

impl std::fmt::Display for CalibrationWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CalibrationWarning::CriterionMismatch {
                requested_db,
                stored_db,
            } => write!(
                f,
                "calibration table was built for a {stored_db} dB criterion, {requested_db} dB requested"
            ),
        }
    }
}

impl BackoffCalibration {
    /// Chord backoff `mu_l(b)`.
    pub fn mu_chord(&self, b: u32) -> f64 {
        self.chord_slope * b as f64 + self.chord_intercept
    }

    pub fn mu_star(&self, b: u32) -> Option<f64> {
        self.entries.get(&b).map(|e| e.mu_star)
    }

    /// Whether the tabulated `mu*(b)` met the stored criterion.
    pub fn meets_criterion(&self, b: u32) -> Option<bool> {
        self.entries
            .get(&b)
            .map(|e| e.deviation_db <= self.criterion_db)
    }

    pub fn check_criterion(&self, requested_db: f64) -> Option<CalibrationWarning> {
        (requested_db != self.criterion_db).then_some(CalibrationWarning::CriterionMismatch {
            requested_db,
            stored_db: self.criterion_db,
        })
    }

    /// Table shipped with the crate (`data/calibration_default.txt`), produced by
    /// `qmimo calibrate` with the default settings.
    pub fn bundled() -> Self {
        parse_calibration(BUNDLED_TABLE, Path::new("data/calibration_default.txt"))
            .expect("bundled calibration table is well-formed")
    }
}

/// Settings for a full calibration table.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSettings {
    pub b_min: u32,
    pub b_max: u32,
    pub criterion_db: f64,
    pub search: SearchGrid,
    pub n_samples: usize,
    pub seed: u64,
    pub policy: InfeasiblePolicy,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            b_min: 1,
            b_max: 12,
            criterion_db: DEFAULT_CRITERION_DB,
            search: SearchGrid::default(),
            n_samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            policy: InfeasiblePolicy::default(),
        }
    }
}

/// Outcome of the per-resolution search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuSearch {
    pub mu: f64,
    pub stats: DistortionStats,
    pub feasible: bool,
}

/// Smallest `mu` on the grid meeting `criterion_db`, refined by bisection against the
/// preceding (failing) grid point. Returns the deviation-minimising point with
/// `feasible = false` when nothing on the grid passes.
pub fn search_mu(
    samples: &GaussianSamples,
    b: u32,
    criterion_db: f64,
    search: &SearchGrid,
) -> Result<MuSearch> {
    search.validate()?;
    let grid = search.points();
    let mut evaluated = Vec::with_capacity(grid.len());
    for (i, &mu) in grid.iter().enumerate() {
        let stats = samples.stats(b, mu)?;
        if stats.deviation_db <= criterion_db {
            if i == 0 {
                return Ok(MuSearch {
                    mu,
                    stats,
                    feasible: true,
                });
            }
            let (mut lo, mut hi, mut hi_stats) = (grid[i - 1], mu, stats);
            while hi / lo - 1.0 > REFINE_TOL {
                let mid = (lo * hi).sqrt();
                let s = samples.stats(b, mid)?;
                if s.deviation_db <= criterion_db {
                    hi = mid;
                    hi_stats = s;
                } else {
                    lo = mid;
                }
            }
            return Ok(MuSearch {
                mu: hi,
                stats: hi_stats,
                feasible: true,
            });
        }
        evaluated.push(stats);
    }

    // Nothing passes: golden-section refinement around the best grid point.
    let best = (0..grid.len())
        .min_by(|&a, &c| {
            evaluated[a]
                .deviation_db
                .total_cmp(&evaluated[c].deviation_db)
        })
        .expect("grid is non-empty");
    let mut lo = grid[best.saturating_sub(1)].ln();
    let mut hi = grid[(best + 1).min(grid.len() - 1)].ln();
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let dev = |ln_mu: f64| samples.stats(b, ln_mu.exp()).map(|s| s.deviation_db);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (dev(x1)?, dev(x2)?);
    while hi - lo > REFINE_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = dev(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = dev(x2)?;
        }
    }
    let candidate = (0.5 * (lo + hi)).exp();
    let stats = samples.stats(b, candidate)?;
    let (mu, stats) = if stats.deviation_db <= evaluated[best].deviation_db {
        (candidate, stats)
    } else {
        (grid[best], evaluated[best])
    };
    Ok(MuSearch {
        mu,
        stats,
        feasible: false,
    })
}

/// Calibrated backoff `mu*(b)`; fails when no grid point meets the criterion.
pub fn calibrate_mu(
    b: u32,
    criterion_db: f64,
    search: &SearchGrid,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    check_samples(n_samples)?;
    let samples = GaussianSamples::generate(n_samples, seed);
    let found = search_mu(&samples, b, criterion_db, search)?;
    if !found.feasible {
        return Err(Error::CalibrationFailure {
            b,
            best_deviation_db: found.stats.deviation_db,
            criterion_db,
        });
    }
    Ok(found.mu)
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    Ok(())
}

/// Calibrates every `b` in `[b_min, b_max]` and fits the chord. Resolutions are independent
/// and run in parallel; on failure the smallest failing `b` is reported.
pub fn calibrate_table(settings: &CalibrationSettings) -> Result<BackoffCalibration> {
    check_samples(settings.n_samples)?;
    settings.search.validate()?;
    if settings.b_min < 1 || settings.b_max <= settings.b_min {
        return Err(Error::invalid(format!(
            "b range must satisfy 1 <= b_min < b_max, got [{}, {}]",
            settings.b_min, settings.b_max
        )));
    }
    let samples = GaussianSamples::generate(settings.n_samples, settings.seed);
    let results: Vec<(u32, Result<MuSearch>)> = (settings.b_min..=settings.b_max)
        .into_par_iter()
        .map(|b| {
            (
                b,
                search_mu(&samples, b, settings.criterion_db, &settings.search),
            )
        })
        .collect();

    let mut entries = BTreeMap::new();
    for (b, res) in results {
        let found = res?;
        let fallback_ok = match settings.policy {
            InfeasiblePolicy::Strict => false,
            InfeasiblePolicy::OneBitFallback => b == 1,
            InfeasiblePolicy::BestEffort => true,
        };
        if !found.feasible && !fallback_ok {
            return Err(Error::CalibrationFailure {
                b,
                best_deviation_db: found.stats.deviation_db,
                criterion_db: settings.criterion_db,
            });
        }
        entries.insert(
            b,
            CalibrationEntry {
                mu_star: found.mu,
                deviation_db: found.stats.deviation_db,
                rho_xq: found.stats.rho_xq,
            },
        );
    }
    let mut calib = BackoffCalibration {
        entries,
        chord_slope: 0.0,
        chord_intercept: 0.0,
        b_min: settings.b_min,
        b_max: settings.b_max,
        criterion_db: settings.criterion_db,
        n_samples: settings.n_samples,
        seed: settings.seed,
        created: None,
    };
    let (slope, intercept) = fit_chord(&calib)?;
    calib.chord_slope = slope;
    calib.chord_intercept = intercept;
    check_chord_positive(&calib)?;
    Ok(calib)
}

/// Line through `(b_min, mu*(b_min))` and `(b_max, mu*(b_max))`.
pub fn fit_chord(calib: &BackoffCalibration) -> Result<(f64, f64)> {
    let endpoint = |b: u32| {
        calib.mu_star(b).ok_or_else(|| {
            Error::InvalidState(format!("calibration has no entry for endpoint b = {b}"))
        })
    };
    if calib.b_max <= calib.b_min {
        return Err(Error::InvalidState(format!(
            "degenerate b range [{}, {}]",
            calib.b_min, calib.b_max
        )));
    }
    let lo = endpoint(calib.b_min)?;
    let hi = endpoint(calib.b_max)?;
    let slope = (hi - lo) / f64::from(calib.b_max - calib.b_min);
    Ok((slope, lo - slope * f64::from(calib.b_min)))
}

fn check_chord_positive(calib: &BackoffCalibration) -> Result<()> {
    for b in [calib.b_min, calib.b_max] {
        if !(calib.mu_chord(b) > 0.0) {
            return Err(Error::InvalidState(format!(
                "chord backoff is not positive at b = {b}"
            )));
        }
    }
    Ok(())
}

const HEADER_KEYS: [&str; 9] = [
    "format",
    "criterion_db",
    "n_samples",
    "seed",
    "b_min",
    "b_max",
    "chord_slope",
    "chord_intercept",
    "rows",
];
const FORMAT_VERSION: &str = "1";
const COLUMNS: &str = "# b mu_star deviation_db rho_xq";

/// Serialises a table. Layout, one item per line:
///
/// ```text
/// # qmimo backoff calibration table
/// format = 1
/// criterion_db = <f64>
/// n_samples = <usize>
/// seed = <u64>
/// b_min = <u32>
/// b_max = <u32>
/// chord_slope = <f64>
/// chord_intercept = <f64>
/// rows = <usize>
/// created = <text>            (optional)
/// # b mu_star deviation_db rho_xq
/// <b> <mu_star> <deviation_db> <rho_xq>   (one row per tabulated b, ascending)
/// ```
///
/// Floats use Rust's shortest round-trip formatting, so save/load is lossless.
pub fn calibration_to_text(calib: &BackoffCalibration) -> String {
    let mut s = String::from("# qmimo backoff calibration table\n");
    let _ = writeln!(s, "format = {FORMAT_VERSION}");
    let _ = writeln!(s, "criterion_db = {}", calib.criterion_db);
    let _ = writeln!(s, "n_samples = {}", calib.n_samples);
    let _ = writeln!(s, "seed = {}", calib.seed);
    let _ = writeln!(s, "b_min = {}", calib.b_min);
    let _ = writeln!(s, "b_max = {}", calib.b_max);
    let _ = writeln!(s, "chord_slope = {}", calib.chord_slope);
    let _ = writeln!(s, "chord_intercept = {}", calib.chord_intercept);
    let _ = writeln!(s, "rows = {}", calib.entries.len());
    if let Some(created) = &calib.created {
        let _ = writeln!(s, "created = {created}");
    }
    s.push_str(COLUMNS);
    s.push('\n');
    for (b, e) in &calib.entries {
        let _ = writeln!(s, "{b} {} {} {}", e.mu_star, e.deviation_db, e.rho_xq);
    }
    s
}

pub fn save_calibration(calib: &BackoffCalibration, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, calibration_to_text(calib)).map_err(|e| Error::io(path, e))
}

pub fn load_calibration(path: impl AsRef<Path>) -> Result<BackoffCalibration> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_calibration(&text, path)
}

/// Loads a table and reports a warning when it was built for a different criterion.
pub fn load_calibration_checked(
    path: impl AsRef<Path>,
    requested_criterion_db: f64,
) -> Result<(BackoffCalibration, Vec<CalibrationWarning>)> {
    let calib = load_calibration(path)?;
    let warnings = calib
        .check_criterion(requested_criterion_db)
        .into_iter()
        .collect();
    Ok((calib, warnings))
}

pub fn parse_calibration(text: &str, path: &Path) -> Result<BackoffCalibration> {
    let err = |line: usize, field: &str, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        field: field.to_string(),
        message,
    };
    fn num<T: std::str::FromStr>(
        raw: &str,
        line: usize,
        field: &str,
        err: &dyn Fn(usize, &str, String) -> Error,
    ) -> Result<T> {
        raw.trim()
            .parse::<T>()
            .map_err(|_| err(line, field, format!("cannot parse `{}`", raw.trim())))
    }

    let mut header: Vec<(usize, String)> = Vec::new();
    let mut created = None;
    let mut rows: Vec<(usize, &str)> = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            let key = key.trim();
            if !rows.is_empty() {
                return Err(err(lineno, key, "header entry after data rows".into()));
            }
            if key == "created" {
                created = Some(value.trim().to_string());
                continue;
            }
            let expected = HEADER_KEYS.get(header.len()).copied();
            if expected != Some(key) {
                return Err(err(
                    lineno,
                    key,
                    format!("expected header key `{}`", expected.unwrap_or("<data row>")),
                ));
            }
            header.push((lineno, value.trim().to_string()));
        } else {
            if header.len() != HEADER_KEYS.len() {
                return Err(err(
                    lineno,
                    HEADER_KEYS[header.len()],
                    "missing header entry before data rows".into(),
                ));
            }
            rows.push((lineno, line));
        }
    }
    if header.len() != HEADER_KEYS.len() {
        return Err(err(
            last_line,
            HEADER_KEYS[header.len()],
            "file ends before header is complete".into(),
        ));
    }

    let h = |i: usize| (header[i].0, header[i].1.as_str(), HEADER_KEYS[i]);
    let (l, v, k) = h(0);
    if v != FORMAT_VERSION {
        return Err(err(l, k, format!("unsupported format version `{v}`")));
    }
    let (l, v, k) = h(1);
    let criterion_db: f64 = num(v, l, k, &err)?;
    let (l, v, k) = h(2);
    let n_samples: usize = num(v, l, k, &err)?;
    let (l, v, k) = h(3);
    let seed: u64 = num(v, l, k, &err)?;
    let (l, v, k) = h(4);
    let b_min: u32 = num(v, l, k, &err)?;
    let (l, v, k) = h(5);
    let b_max: u32 = num(v, l, k, &err)?;
    let (l, v, k) = h(6);
    let chord_slope: f64 = num(v, l, k, &err)?;
    let (l, v, k) = h(7);
    let chord_intercept: f64 = num(v, l, k, &err)?;
    let (rows_line, v, k) = h(8);
    let n_rows: usize = num(v, rows_line, k, &err)?;

    let mut entries = BTreeMap::new();
    for &(lineno, row) in &rows {
        let fields: Vec<&str> = row.split_whitespace().collect();
        const NAMES: [&str; 4] = ["b", "mu_star", "deviation_db", "rho_xq"];
        if fields.len() != NAMES.len() {
            return Err(err(
                lineno,
                NAMES.get(fields.len()).unwrap_or(&"row"),
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let b: u32 = num(fields[0], lineno, NAMES[0], &err)?;
        let entry = CalibrationEntry {
            mu_star: num(fields[1], lineno, NAMES[1], &err)?,
            deviation_db: num(fields[2], lineno, NAMES[2], &err)?,
            rho_xq: num(fields[3], lineno, NAMES[3], &err)?,
        };
        if !(entry.mu_star > 0.0) {
            return Err(err(lineno, NAMES[1], "backoff must be > 0".into()));
        }
        if entries.insert(b, entry).is_some() {
            return Err(err(lineno, NAMES[0], format!("duplicate row for b = {b}")));
        }
    }
    if entries.len() != n_rows {
        return Err(err(
            last_line,
            "rows",
            format!(
                "header declares {n_rows} rows but {} were read (truncated file?)",
                entries.len()
            ),
        ));
    }

    let calib = BackoffCalibration {
        entries,
        chord_slope,
        chord_intercept,
        b_min,
        b_max,
        criterion_db,
        n_samples,
        seed,
        created,
    };
    let (slope, intercept) =
        fit_chord(&calib).map_err(|e| err(rows_line, "rows", e.to_string()))?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    if !close(slope, chord_slope) || !close(intercept, chord_intercept) {
        return Err(err(
            header[6].0,
            "chord_slope",
            "chord coefficients do not match the endpoint rows".into(),
        ));
    }
    Ok(calib)
}
