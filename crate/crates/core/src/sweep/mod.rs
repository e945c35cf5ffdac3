//! Deterministic parameter sweeps over `(b, M, K/M, K/T, SNR, alpha, tau/T)` and optimum
//! extraction.
//!
//! Grid points are resolved into integer system sizes in a fixed order:
//!
//! 1. `K = max(1, round(K/M * M))`
//! 2. `T = round(K / (K/T))`
//! 3. `tau = max(K, round(tau/T * T))`, so `tau/T = 0` means minimal training.
//!
//! Each `(M, K)` pair gets its own seed derived from the master seed and the two values, so
//! every point with the same array and load shares channel draws (common random numbers)
//! and no record depends on where else the grid reaches.

mod optimum;
mod presets;
mod run;

use std::fmt;
use std::str::FromStr;

pub use optimum::{
    degradation_factor, find_optimal_b, find_optimal_training, Column, GroupFactor, GroupOptimum,
};
pub use presets::Preset;
pub use run::{point_config, point_seed, run_sweep, PointStatus, SweepRecord};

use crate::power::{AdcPowerParams, DEFAULT_B_REF};
use crate::uplink::{Backoff, Mode, PqnNoise, Receiver};
use crate::{Error, Result};

/// A sweepable coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    B,
    M,
    KOverM,
    KOverT,
    SnrDb,
    Alpha,
    TauOverT,
}

impl Param {
    pub const ALL: [Param; 7] = [
        Param::B,
        Param::M,
        Param::KOverM,
        Param::KOverT,
        Param::SnrDb,
        Param::Alpha,
        Param::TauOverT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::B => "b",
            Param::M => "M",
            Param::KOverM => "K_over_M",
            Param::KOverT => "K_over_T",
            Param::SnrDb => "snr_db",
            Param::Alpha => "alpha",
            Param::TauOverT => "tau_over_T",
        }
    }

    /// Value used when the parameter is neither swept nor fixed explicitly.
    pub fn default_value(self) -> f64 {
        match self {
            Param::B => 8.0,
            Param::M => 100.0,
            Param::KOverM => 0.1,
            Param::KOverT => 0.01,
            Param::SnrDb => 0.0,
            Param::Alpha => 1e4,
            Param::TauOverT => 0.0,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown sweep parameter `{s}` (expected one of b, M, K_over_M, K_over_T, snr_db, alpha, tau_over_T)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(param: Param, values: impl IntoIterator<Item = f64>) -> Self {
        Self {
            param,
            values: values.into_iter().collect(),
        }
    }

    /// Integer range `lo..=hi`, e.g. a resolution axis.
    pub fn range(param: Param, lo: u32, hi: u32) -> Self {
        Self::new(param, (lo..=hi).map(f64::from))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Outermost axis first.
    pub axes: Vec<Axis>,
    /// Explicitly fixed parameters; anything else takes [`Param::default_value`].
    pub fixed: Vec<(Param, f64)>,
    pub receivers: Vec<Receiver>,
    pub n_trials: u64,
    pub seed: u64,
    pub mode: Mode,
    pub backoff: Backoff,
    pub p_u: f64,
    /// Hz.
    pub bandwidth: f64,
    /// ADC model. Its sampling rate is replaced by the bandwidth unless
    /// `sampling_rate` is set.
    pub power: AdcPowerParams,
    pub sampling_rate: Option<f64>,
    pub b_ref: u32,
    pub pqn_noise: PqnNoise,
    pub hardware_symbols: usize,
}

impl SweepSpec {
    /// Empty grid with the defaults used throughout: ZF, 2000 trials, PQN mode, the bundled
    /// calibration chord, unit transmit power, 20 MHz.
    pub fn new(backoff: Backoff) -> Self {
        Self {
            axes: Vec::new(),
            fixed: Vec::new(),
            receivers: vec![Receiver::Zf],
            n_trials: 2000,
            seed: 1,
            mode: Mode::Pqn,
            backoff,
            p_u: 1.0,
            bandwidth: 20e6,
            power: AdcPowerParams::default(),
            sampling_rate: None,
            b_ref: DEFAULT_B_REF,
            pqn_noise: PqnNoise::Uniform,
            hardware_symbols: 1000,
        }
    }

    /// Appends an axis, dropping any fixed value of the same parameter.
    pub fn with_axis(mut self, axis: Axis) -> Self {
        self.fixed.retain(|(p, _)| *p != axis.param);
        self.axes.push(axis);
        self
    }

    pub fn with_fixed(mut self, param: Param, value: f64) -> Self {
        self.fixed.retain(|(p, _)| *p != param);
        self.fixed.push((param, value));
        self
    }

    pub fn with_receivers(mut self, receivers: &[Receiver]) -> Self {
        self.receivers = receivers.to_vec();
        self
    }

    pub fn with_trials(mut self, n_trials: u64) -> Self {
        self.n_trials = n_trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// ADC parameters with the effective sampling rate filled in.
    pub fn effective_power(&self) -> AdcPowerParams {
        self.power
            .with_sampling_rate(self.sampling_rate.unwrap_or(self.bandwidth))
    }

    pub fn grid_len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (i, a) in self.axes.iter().enumerate() {
            if a.values.is_empty() {
                problems.push(format!("axis {} has no values", a.param));
            }
            if a.values.iter().any(|v| !v.is_finite()) {
                problems.push(format!("axis {} has a non-finite value", a.param));
            }
            if self.axes[..i].iter().any(|b| b.param == a.param) {
                problems.push(format!("axis {} appears twice", a.param));
            }
            if self.fixed.iter().any(|(p, _)| *p == a.param) {
                problems.push(format!("{} is both swept and fixed", a.param));
            }
        }
        if self.receivers.is_empty() {
            problems.push("at least one receiver is required".into());
        }
        if self.n_trials == 0 {
            problems.push("n_trials must be >= 1".into());
        }
        if !(self.p_u > 0.0) || !(self.bandwidth > 0.0) {
            problems.push("p_u and bandwidth must be > 0".into());
        }
        if self.mode == Mode::Hardware && self.hardware_symbols == 0 {
            problems.push("hardware mode needs at least one data symbol per trial".into());
        }
        if let Err(e) = self.effective_power().validate() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }

    /// Every grid point as a full parameter vector indexed by [`Param`], in lexicographic
    /// axis order (first axis outermost).
    pub(crate) fn grid(&self) -> Vec<[f64; 7]> {
        let mut base = [0.0; 7];
        for p in Param::ALL {
            base[p.index()] = p.default_value();
        }
        for &(p, v) in &self.fixed {
            base[p.index()] = v;
        }
        let mut points = vec![base];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|pt| {
                    axis.values.iter().map(move |&v| {
                        let mut q = pt;
                        q[axis.param.index()] = v;
                        q
                    })
                })
                .collect();
        }
        points
    }
}

/// Integer system sizes derived from one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedPoint {
    pub b: u32,
    pub m: usize,
    pub k: usize,
    pub t: usize,
    pub tau: usize,
    pub snr_db: f64,
    pub alpha: f64,
    pub k_over_m: f64,
    pub k_over_t: f64,
    pub tau_over_t: f64,
}

fn as_count(v: f64, what: &str, problems: &mut Vec<String>) -> usize {
    if v.fract() != 0.0 || !(1.0..=1e9).contains(&v) {
        problems.push(format!("{what} must be a positive integer, got {v}"));
        0
    } else {
        v as usize
    }
}

/// Resolves a grid point. On failure the partially derived point is returned with the reason.
pub fn resolve_point(
    values: &[f64; 7],
) -> std::result::Result<ResolvedPoint, (ResolvedPoint, String)> {
    let get = |p: Param| values[p.index()];
    let mut problems = Vec::new();
    let b = as_count(get(Param::B), "b", &mut problems) as u32;
    let m = as_count(get(Param::M), "M", &mut problems);
    let (k_over_m, k_over_t, tau_over_t) =
        (get(Param::KOverM), get(Param::KOverT), get(Param::TauOverT));
    if !(k_over_m > 0.0) {
        problems.push(format!("K_over_M must be > 0, got {k_over_m}"));
    }
    if !(k_over_t > 0.0) {
        problems.push(format!("K_over_T must be > 0, got {k_over_t}"));
    }
    if !(tau_over_t >= 0.0) {
        problems.push(format!("tau_over_T must be >= 0, got {tau_over_t}"));
    }
    let k = ((k_over_m * m as f64).round() as usize).max(1);
    let t = if k_over_t > 0.0 {
        (k as f64 / k_over_t).round() as usize
    } else {
        0
    };
    let tau = ((tau_over_t.max(0.0) * t as f64).round() as usize).max(k);
    if m > 0 && k > m {
        problems.push(format!("M ({m}) must be >= K ({k})"));
    }
    if tau > t {
        problems.push(format!("tau ({tau}) must be <= T ({t})"));
    }
    if b > crate::quantizer::MAX_BITS {
        problems.push(format!("b must be <= {}", crate::quantizer::MAX_BITS));
    }
    let point = ResolvedPoint {
        b,
        m,
        k,
        t,
        tau,
        snr_db: get(Param::SnrDb),
        alpha: get(Param::Alpha),
        k_over_m,
        k_over_t,
        tau_over_t: if t > 0 {
            tau as f64 / t as f64
        } else {
            f64::NAN
        },
    };
    if !(point.alpha >= 0.0) {
        problems.push(format!("alpha must be >= 0, got {}", point.alpha));
    }
    if problems.is_empty() {
        Ok(point)
    } else {
        Err((point, problems.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(pairs: &[(Param, f64)]) -> [f64; 7] {
        let mut v = [0.0; 7];
        for p in Param::ALL {
            v[p.index()] = p.default_value();
        }
        for &(p, x) in pairs {
            v[p.index()] = x;
        }
        v
    }

    #[test]
    fn derivation_of_defaults() {
        let p = resolve_point(&values(&[])).unwrap();
        assert_eq!((p.m, p.k, p.t, p.tau), (100, 10, 1000, 10));
        assert!((p.tau_over_t - 0.01).abs() < 1e-15);
    }

    #[test]
    fn derivation_rounds_and_clamps() {
        let p = resolve_point(&values(&[
            (Param::M, 50.0),
            (Param::KOverM, 0.025),
            (Param::KOverT, 0.005),
            (Param::TauOverT, 0.1),
        ]))
        .unwrap();
        // 1.25 rounds to 1, T = 200, tau = 20
        assert_eq!((p.k, p.t, p.tau), (1, 200, 20));
        let p = resolve_point(&values(&[(Param::M, 3.0), (Param::KOverM, 0.01)])).unwrap();
        assert_eq!(p.k, 1);
    }

    #[test]
    fn invalid_points_report_reasons() {
        let (_, why) =
            resolve_point(&values(&[(Param::B, 2.5), (Param::KOverM, 2.0)])).unwrap_err();
        assert!(why.contains("b must be"));
        assert!(why.contains("must be >= K"));
        let (_, why) = resolve_point(&values(&[(Param::TauOverT, 2.0)])).unwrap_err();
        assert!(why.contains("tau"));
    }

    #[test]
    fn grid_is_lexicographic() {
        let spec = SweepSpec::new(Backoff::Fixed(4.0))
            .with_axis(Axis::new(Param::Alpha, [1.0, 2.0]))
            .with_axis(Axis::range(Param::B, 1, 3));
        let g = spec.grid();
        assert_eq!(g.len(), 6);
        let pairs: Vec<(f64, f64)> = g.iter().map(|v| (v[Param::Alpha.index()], v[0])).collect();
        assert_eq!(
            pairs,
            vec![
                (1.0, 1.0),
                (1.0, 2.0),
                (1.0, 3.0),
                (2.0, 1.0),
                (2.0, 2.0),
                (2.0, 3.0)
            ]
        );
    }

    #[test]
    fn swept_and_fixed_must_be_disjoint() {
        let mut spec = SweepSpec::new(Backoff::Fixed(4.0)).with_fixed(Param::B, 4.0);
        spec.axes.push(Axis::range(Param::B, 1, 3));
        assert!(spec.validate().is_err());
    }

    #[test]
    fn param_names_round_trip() {
        for p in Param::ALL {
            assert_eq!(p.name().parse::<Param>().unwrap(), p);
        }
        assert!("beta".parse::<Param>().is_err());
    }
}
