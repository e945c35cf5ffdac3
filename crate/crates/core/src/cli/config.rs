//! Run configuration file: TOML with one section per module.
//!
//! Every key is optional; the defaults reproduce the reference system (M = 100, K = 10,
//! T = 1000, minimal training, 0 dB SNR, ZF, 20 MHz, alpha = 1e4, b_ref = 2, bundled
//! calibration). A results manifest is itself a valid configuration file.
//!
//! ```toml
//! [system]
//! M = 100
//! K = 10
//! T = 1000
//! snr_db = 0.0
//! b = 8
//! receiver = "zf"        # mrc | zf | both
//!
//! [power]
//! alpha = 1e4
//!
//! [calibration]
//! path = "calib.txt"     # omit to use the bundled table
//!
//! [sweep]
//! receivers = ["zf", "mrc"]
//! fixed = { M = 100, K_over_M = 0.1 }
//! [[sweep.axis]]
//! name = "b"
//! values = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::{
    BackoffCalibration, CalibrationSettings, InfeasiblePolicy, SearchGrid, DEFAULT_CRITERION_DB,
    DEFAULT_SAMPLES, DEFAULT_SEED,
};
use crate::power::{self, AdcPowerParams};
use crate::sweep::{Axis, Param, SweepSpec};
use crate::uplink::{Backoff, Mode, PqnNoise, Receiver, UplinkConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub power: PowerSection,
    pub calibration: CalibrationSection,
    pub sweep: SweepSection,
    /// Provenance written into manifests; ignored when loading.
    #[serde(skip_serializing)]
    pub manifest: Option<toml::Table>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub t: usize,
    /// Training length; defaults to `K`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    pub p_u: f64,
    pub snr_db: f64,
    /// Large-scale gains; defaults to all ones.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    pub b: u32,
    /// `mrc`, `zf` or `both`.
    pub receiver: String,
    pub bandwidth_hz: f64,
    pub mode: String,
    pub pqn_noise: String,
    pub hardware_symbols: usize,
    pub trials: u64,
    pub seed: u64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            m: 100,
            k: 10,
            t: 1000,
            tau: None,
            p_u: 1.0,
            snr_db: 0.0,
            beta: None,
            b: 8,
            receiver: "zf".into(),
            bandwidth_hz: 20e6,
            mode: "pqn".into(),
            pqn_noise: "uniform".into(),
            hardware_symbols: 1000,
            trials: 2000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerSection {
    pub omega: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// ADC sampling rate; defaults to the bandwidth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling_rate_hz: Option<f64>,
    pub alpha: f64,
    pub b_ref: u32,
}

impl Default for PowerSection {
    fn default() -> Self {
        let p = AdcPowerParams::default();
        Self {
            omega: p.omega,
            c1: p.c1,
            c2: p.c2,
            c3: p.c3,
            c4: p.c4,
            sampling_rate_hz: None,
            alpha: 1e4,
            b_ref: power::DEFAULT_B_REF,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    /// Calibration table; the bundled one when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Fixed backoff overriding the calibration chord.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backoff: Option<f64>,
    pub criterion_db: f64,
    pub b_min: u32,
    pub b_max: u32,
    pub samples: f64,
    pub seed: u64,
    pub grid_points: usize,
    pub mu_min: f64,
    pub mu_max: f64,
    /// `strict`, `one-bit-fallback` or `best-effort`.
    pub policy: String,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        let g = SearchGrid::default();
        Self {
            path: None,
            backoff: None,
            criterion_db: DEFAULT_CRITERION_DB,
            b_min: 1,
            b_max: 12,
            samples: DEFAULT_SAMPLES as f64,
            seed: DEFAULT_SEED,
            grid_points: g.grid_points,
            mu_min: g.mu_min,
            mu_max: g.mu_max,
            policy: "one-bit-fallback".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Receivers to run (`mrc`, `zf`).
    pub receivers: Vec<String>,
    /// Fixed values by parameter name; unswept, unfixed parameters take their defaults.
    pub fixed: BTreeMap<String, f64>,
    /// Axes, outermost first.
    pub axis: Vec<AxisSection>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            receivers: vec!["zf".into()],
            fixed: BTreeMap::new(),
            axis: vec![AxisSection {
                name: "b".into(),
                values: (1..=12).map(f64::from).collect(),
            }],
        }
    }
}

fn policy_from_str(s: &str) -> Result<InfeasiblePolicy> {
    match s.to_ascii_lowercase().as_str() {
        "strict" => Ok(InfeasiblePolicy::Strict),
        "one-bit-fallback" => Ok(InfeasiblePolicy::OneBitFallback),
        "best-effort" => Ok(InfeasiblePolicy::BestEffort),
        other => Err(Error::invalid(format!(
            "unknown calibration policy `{other}` (expected strict, one-bit-fallback or best-effort)"
        ))),
    }
}

/// `mrc`, `zf` or `both`.
pub fn parse_receivers(s: &str) -> Result<Vec<Receiver>> {
    if s.eq_ignore_ascii_case("both") {
        Ok(vec![Receiver::Zf, Receiver::Mrc])
    } else {
        Ok(vec![s.parse()?])
    }
}

/// Reads a configuration file; syntax and unknown-key errors carry the line number.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        let field = e.message().split('`').nth(1).unwrap_or("").to_string();
        Error::Parse {
            path: path.to_path_buf(),
            line,
            field,
            message: e.message().trim().to_string(),
        }
    })
}

impl RunConfig {
    /// Full configuration as TOML, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn receivers(&self) -> Result<Vec<Receiver>> {
        parse_receivers(&self.system.receiver)
    }

    pub fn mode(&self) -> Result<Mode> {
        self.system.mode.parse()
    }

    pub fn adc_params(&self) -> AdcPowerParams {
        let p = &self.power;
        AdcPowerParams {
            omega: p.omega,
            c1: p.c1,
            c2: p.c2,
            c3: p.c3,
            c4: p.c4,
            f_s: p.sampling_rate_hz.unwrap_or(self.system.bandwidth_hz),
        }
    }

    pub fn calibration_settings(&self) -> Result<CalibrationSettings> {
        let c = &self.calibration;
        if !(c.samples >= 1.0) || c.samples.fract() != 0.0 || c.samples > 1e12 {
            return Err(Error::invalid(format!(
                "calibration samples must be a positive integer, got {}",
                c.samples
            )));
        }
        Ok(CalibrationSettings {
            b_min: c.b_min,
            b_max: c.b_max,
            criterion_db: c.criterion_db,
            search: SearchGrid {
                mu_min: c.mu_min,
                mu_max: c.mu_max,
                grid_points: c.grid_points,
            },
            n_samples: c.samples as usize,
            seed: c.seed,
            policy: policy_from_str(&c.policy)?,
        })
    }

    /// Backoff rule: the fixed override if set, otherwise the calibration chord.
    pub fn backoff(&self, calib: &BackoffCalibration) -> Backoff {
        match self.calibration.backoff {
            Some(mu) => Backoff::Fixed(mu),
            None => Backoff::from_calibration(calib),
        }
    }

    /// Single-run uplink configuration for `receiver`.
    pub fn uplink(&self, receiver: Receiver, calib: &BackoffCalibration) -> Result<UplinkConfig> {
        let pqn = self.system.pqn_noise.parse::<PqnNoise>()?;
        Ok(self.build_uplink(receiver, calib, self.mode()?, pqn))
    }

    fn build_uplink(
        &self,
        receiver: Receiver,
        calib: &BackoffCalibration,
        mode: Mode,
        pqn: PqnNoise,
    ) -> UplinkConfig {
        let s = &self.system;
        let mut cfg = UplinkConfig::new(s.m, s.k, s.t)
            .with_tau(s.tau.unwrap_or(s.k))
            .with_bits(s.b)
            .with_receiver(receiver)
            .with_mode(mode)
            .with_backoff(self.backoff(calib));
        cfg.p_u = s.p_u;
        cfg = cfg.with_snr_db(s.snr_db);
        if let Some(beta) = &s.beta {
            cfg.beta = beta.clone();
        }
        cfg.bandwidth = s.bandwidth_hz;
        cfg.pqn_noise = pqn;
        cfg.hardware_symbols = s.hardware_symbols;
        cfg
    }

    pub fn sweep_spec(&self, calib: &BackoffCalibration) -> Result<SweepSpec> {
        let s = &self.system;
        let mut spec = SweepSpec::new(self.backoff(calib))
            .with_trials(s.trials)
            .with_seed(s.seed);
        spec.receivers = self
            .sweep
            .receivers
            .iter()
            .map(|r| parse_receivers(r))
            .collect::<Result<Vec<_>>>()?
            .concat();
        spec.receivers.dedup();
        spec.mode = self.mode()?;
        spec.p_u = s.p_u;
        spec.bandwidth = s.bandwidth_hz;
        spec.power = self.adc_params();
        spec.sampling_rate = self.power.sampling_rate_hz;
        spec.b_ref = self.power.b_ref;
        spec.pqn_noise = s.pqn_noise.parse()?;
        spec.hardware_symbols = s.hardware_symbols;
        for (name, v) in &self.sweep.fixed {
            spec.fixed.push((name.parse::<Param>()?, *v));
        }
        for a in &self.sweep.axis {
            spec.axes.push(Axis::new(
                a.name.parse::<Param>()?,
                a.values.iter().copied(),
            ));
        }
        Ok(spec)
    }

    /// Stores a sweep spec back into the `[sweep]` and `[system]` sections so a manifest
    /// reproduces the exact grid.
    pub fn set_sweep(&mut self, spec: &SweepSpec) {
        self.sweep.receivers = spec.receivers.iter().map(|r| r.to_string()).collect();
        self.sweep.fixed = spec
            .fixed
            .iter()
            .map(|(p, v)| (p.name().to_string(), *v))
            .collect();
        self.sweep.axis = spec
            .axes
            .iter()
            .map(|a| AxisSection {
                name: a.param.name().into(),
                values: a.values.clone(),
            })
            .collect();
        self.system.trials = spec.n_trials;
        self.system.seed = spec.seed;
        self.system.mode = spec.mode.to_string();
    }

    /// Every problem with the configuration at once.
    pub fn violations(&self, calib: &BackoffCalibration) -> Vec<String> {
        let mut v = Vec::new();
        let mut push_err = |r: Result<()>| {
            if let Err(e) = r {
                v.push(e.to_string());
            }
        };
        push_err(self.mode().map(|_| ()));
        push_err(self.system.pqn_noise.parse::<PqnNoise>().map(|_| ()));
        push_err(self.calibration_settings().map(|_| ()));
        push_err(self.adc_params().validate());
        if !(self.power.alpha >= 0.0) || !self.power.alpha.is_finite() {
            v.push(format!(
                "alpha must be finite and >= 0, got {}",
                self.power.alpha
            ));
        }
        if self.system.trials == 0 {
            v.push("trials must be >= 1".into());
        }
        match self.receivers() {
            Err(e) => v.push(e.to_string()),
            Ok(rx) => {
                // Unparsable enums are already reported; check the rest against defaults.
                let mode = self.mode().unwrap_or(Mode::Pqn);
                let pqn = self.system.pqn_noise.parse().unwrap_or_default();
                v.extend(self.build_uplink(rx[0], calib, mode, pqn).violations());
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse_config("", Path::new("x.toml")).unwrap();
        assert_eq!(c, RunConfig::default());
        let calib = BackoffCalibration::bundled();
        assert!(c.violations(&calib).is_empty());
        let cfg = c.uplink(Receiver::Zf, &calib).unwrap();
        assert_eq!((cfg.m, cfg.k, cfg.coherence, cfg.tau), (100, 10, 1000, 10));
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig::default();
        c.system.snr_db = -10.0;
        c.system.beta = Some(vec![1.0; 10]);
        c.calibration.backoff = Some(12.5);
        let back = parse_config(&c.to_toml(), Path::new("x")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_key_reports_line_and_field() {
        let text = "[system]\nM = 10\nantennas = 4\n";
        match parse_config(text, Path::new("bad.toml")) {
            Err(Error::Parse { line, field, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(field, "antennas");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_violations_listed() {
        let mut c = RunConfig::default();
        c.system.m = 4;
        c.system.tau = Some(2000);
        c.system.mode = "analog".into();
        let v = c.violations(&BackoffCalibration::bundled());
        assert!(v.iter().any(|s| s.contains("unknown mode")));
        assert!(v.iter().any(|s| s.contains("M (4)")));
        assert!(v.iter().any(|s| s.contains("tau (2000) must be <= T")));
    }

    #[test]
    fn sweep_section_builds_spec() {
        let text = r#"
[sweep]
receivers = ["both"]
fixed = { M = 50, snr_db = -10 }
[[sweep.axis]]
name = "alpha"
values = [100, 1000]
[[sweep.axis]]
name = "b"
values = [1, 2]
"#;
        let c = parse_config(text, Path::new("s.toml")).unwrap();
        let spec = c.sweep_spec(&BackoffCalibration::bundled()).unwrap();
        assert_eq!(spec.receivers, vec![Receiver::Zf, Receiver::Mrc]);
        assert_eq!(spec.axes[0].param, Param::Alpha);
        assert_eq!(spec.grid_len(), 4);
        let mut again = RunConfig::default();
        again.set_sweep(&spec);
        assert_eq!(
            again.sweep_spec(&BackoffCalibration::bundled()).unwrap(),
            spec
        );
    }
}
