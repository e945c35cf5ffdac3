//! Results files: the sweep CSV, companion optimum tables and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sweep::{Column, GroupFactor, GroupOptimum, SweepRecord};
use crate::{Error, Result};

/// Column order of every results CSV.
pub const CSV_HEADER: [&str; 14] = [
    "receiver",
    "b",
    "M",
    "K",
    "T",
    "tau",
    "snr_db",
    "alpha",
    "C_bits_per_s",
    "P_tot_W",
    "eta_bits_per_J",
    "trials_used",
    "trials_discarded",
    "status",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub receiver: String,
    pub b: u32,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub tau: usize,
    pub snr_db: f64,
    pub alpha: f64,
    #[serde(rename = "C_bits_per_s")]
    pub sumrate: f64,
    #[serde(rename = "P_tot_W")]
    pub p_tot: f64,
    #[serde(rename = "eta_bits_per_J")]
    pub eta: f64,
    pub trials_used: u64,
    pub trials_discarded: u64,
    pub status: String,
}

impl From<&SweepRecord> for CsvRow {
    fn from(r: &SweepRecord) -> Self {
        let p = &r.point;
        Self {
            receiver: r.receiver.to_string(),
            b: p.b,
            m: p.m,
            k: p.k,
            t: p.t,
            tau: p.tau,
            snr_db: p.snr_db,
            alpha: p.alpha,
            sumrate: r.sumrate,
            p_tot: r.p_tot,
            eta: r.eta,
            trials_used: r.trials_used,
            trials_discarded: r.trials_discarded,
            status: r.status.to_string(),
        }
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        csv::ErrorKind::Deserialize { pos, err } => Error::Parse {
            path: path.to_path_buf(),
            line: pos.map(|p| p.line() as usize).unwrap_or(0),
            field: err.field().map(|f| f.to_string()).unwrap_or_default(),
            message: err.to_string(),
        },
        other => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            field: String::new(),
            message: format!("{other:?}"),
        },
    }
}

/// Serializes rows with the mandatory header.
pub fn rows_to_csv(rows: &[CsvRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(CSV_HEADER).expect("in-memory write");
    }
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<Vec<u8>> {
    let bytes = rows_to_csv(rows);
    std::fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(String::from)
        .collect();
    if header != CSV_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            field: "header".into(),
            message: format!("expected {}", CSV_HEADER.join(",")),
        });
    }
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(path, e)))
        .collect()
}

/// Tab-separated optimum table: group columns, then `argmax_name` and `eta_star`.
pub fn optimum_table(keys: &[Column], argmax_name: &str, optima: &[GroupOptimum]) -> String {
    let mut out: Vec<String> = keys.iter().map(|c| c.name().to_string()).collect();
    out.push(argmax_name.into());
    out.push("eta_star_bits_per_J".into());
    let mut s = out.join("\t") + "\n";
    for o in optima {
        let mut cells: Vec<String> = o.group.iter().map(|(c, v)| c.format(*v)).collect();
        cells.push(o.argmax.to_string());
        cells.push(o.eta.to_string());
        s += &(cells.join("\t") + "\n");
    }
    s
}

pub fn degradation_table(keys: &[Column], factors: &[GroupFactor]) -> String {
    let mut out: Vec<String> = keys.iter().map(|c| c.name().to_string()).collect();
    out.push("b_star".into());
    out.push("eta_ratio_bstar_over_b1".into());
    let mut s = out.join("\t") + "\n";
    for f in factors {
        let mut cells: Vec<String> = f.group.iter().map(|(c, v)| c.format(*v)).collect();
        cells.push(f.b_star.to_string());
        cells.push(f.factor.to_string());
        s += &(cells.join("\t") + "\n");
    }
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// `<results>.manifest.toml`.
pub fn manifest_path(results: &Path) -> PathBuf {
    let mut s = results.as_os_str().to_owned();
    s.push(".manifest.toml");
    PathBuf::from(s)
}

/// Provenance written next to a results file. Together with the resolved configuration it
/// forms a TOML file that `--config` accepts, so the run can be repeated from it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    /// Full resolved configuration as TOML.
    pub config_toml: String,
    pub calibration_source: String,
    pub calibration_sha256: String,
    pub seed: u64,
    pub workers: usize,
    pub results: Vec<(PathBuf, String)>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        let mut t = toml::Table::new();
        let mut put = |k: &str, v: toml::Value| {
            t.insert(k.to_string(), v);
        };
        put(
            "tool",
            format!("qmimo {}", env!("CARGO_PKG_VERSION")).into(),
        );
        put("command", self.command.clone().into());
        put(
            "config_path",
            self.config_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "(defaults)".into())
                .into(),
        );
        put("calibration_source", self.calibration_source.clone().into());
        put("calibration_sha256", self.calibration_sha256.clone().into());
        put("seed", toml::Value::Integer(self.seed as i64));
        put("workers", toml::Value::Integer(self.workers as i64));
        let files: toml::Table = self
            .results
            .iter()
            .map(|(p, h)| (p.display().to_string(), toml::Value::from(h.clone())))
            .collect();
        put("results_sha256", files.into());
        put(
            "started_unix",
            toml::Value::Integer(self.started_unix as i64),
        );
        put(
            "finished_unix",
            toml::Value::Integer(self.finished_unix as i64),
        );
        let mut doc = String::from(
            "# Run manifest. Repeat the run with `qmimo <command> --config <this file>`.\n",
        );
        doc += &toml::to_string(&toml::Table::from_iter([(
            "manifest".to_string(),
            t.into(),
        )]))
        .expect("manifest serializes");
        doc.push('\n');
        doc += &self.config_toml;
        doc
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_toml().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::{parse_config, RunConfig};

    fn row(eta: f64) -> CsvRow {
        CsvRow {
            receiver: "zf".into(),
            b: 3,
            m: 100,
            k: 10,
            t: 1000,
            tau: 10,
            snr_db: -10.0,
            alpha: 1e4,
            sumrate: 1.234_567_890_123e8,
            p_tot: 43.3,
            eta,
            trials_used: 2000,
            trials_discarded: 0,
            status: "ok".into(),
        }
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = vec![row(1.0 / 3.0), row(f64::NAN), row(2.5e-300)];
        let bytes = write_csv(&path, &rows).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(rows_to_csv(&back), bytes);
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with(&CSV_HEADER.join(",")));
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn manifest_is_a_valid_config() {
        let mut cfg = RunConfig::default();
        cfg.system.seed = 42;
        let m = RunManifest {
            command: "sweep".into(),
            config_path: None,
            config_toml: cfg.to_toml(),
            calibration_source: "bundled".into(),
            calibration_sha256: sha256_hex(b"x"),
            seed: 42,
            workers: 2,
            results: vec![("out.csv".into(), sha256_hex(b"y"))],
            started_unix: 1,
            finished_unix: 2,
        };
        let parsed = parse_config(&m.to_toml(), Path::new("m.toml")).unwrap();
        assert_eq!(parsed.system, cfg.system);
        assert!(parsed.manifest.is_some());
        assert_eq!(
            manifest_path(Path::new("a/out.csv")),
            Path::new("a/out.csv.manifest.toml")
        );
    }

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
