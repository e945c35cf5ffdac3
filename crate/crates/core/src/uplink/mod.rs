//! Quantized massive-MIMO uplink: Rayleigh channel, AGC, least-squares pilot estimation,
//! MRC/ZF combining, per-user SINQR and the ergodic sumrate.
//!
//! Two quantization models are available. [`Mode::Pqn`] replaces each ADC by additive
//! white noise of variance `p_q = (2/3) 2^{-2b}` (overload point 1 after the AGC) and evaluates
//! the SINQR semi-analytically. [`Mode::Hardware`] pushes the pilot block and a stream of data
//! symbols through the actual quantizer and measures the SINQR from the combiner output.

mod batch;
mod channel;
mod estimation;
mod hardware;
mod pilots;
mod receiver;
mod sinqr;
mod sumrate;

use std::fmt;
use std::str::FromStr;

pub use batch::OperatingPoint;
pub use channel::{agc_gain, draw_channel, AgcState, ChannelRealization};
pub use estimation::estimate_channel;
pub use hardware::{empirical_sinqr, transmit_symbol, SignalTrace};
pub use pilots::{generate_pilots, PilotBlock};
pub use receiver::receiver_matrix;
pub use sinqr::{run_trial, sinqr_semi_analytic, TrialOutcome, TrialWorkspace};
pub use sumrate::{
    ergodic_average, ergodic_sumrate, ergodic_sumrate_points, trial_rng, SumrateResult,
    TrialAverage,
};

use crate::calibration::BackoffCalibration;
use crate::Error;

/// Gram matrices above this 1-norm condition number are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Complex quantization noise variance after an AGC that maps the signal onto `X_ol = 1`.
pub fn quantization_noise_variance(b: u32) -> f64 {
    2.0 / 3.0 * (-2.0 * f64::from(b)).exp2()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Receiver {
    Mrc,
    Zf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Additive PQN injection.
    Pqn,
    /// Bit-true quantizer oracle.
    Hardware,
}

/// Distribution of injected PQN samples (only variances enter the SINQR).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PqnNoise {
    #[default]
    Uniform,
    Gaussian,
}

macro_rules! text_enum {
    ($ty:ty, $what:literal, $($variant:path => $name:literal),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Error> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok($variant),)+
                    other => Err(Error::invalid(format!(concat!("unknown ", $what, " `{}`"), other))),
                }
            }
        }
    };
}

text_enum!(Receiver, "receiver", Receiver::Mrc => "mrc", Receiver::Zf => "zf");
text_enum!(Mode, "mode", Mode::Pqn => "pqn", Mode::Hardware => "hardware");
text_enum!(PqnNoise, "PQN distribution", PqnNoise::Uniform => "uniform", PqnNoise::Gaussian => "gaussian");

/// How the AGC input backoff is chosen for the configured resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backoff {
    Fixed(f64),
    /// `mu = slope * b + intercept`.
    Chord {
        slope: f64,
        intercept: f64,
    },
}

impl Backoff {
    pub fn from_calibration(calib: &BackoffCalibration) -> Self {
        Backoff::Chord {
            slope: calib.chord_slope,
            intercept: calib.chord_intercept,
        }
    }

    pub fn at(&self, b: u32) -> f64 {
        match *self {
            Backoff::Fixed(mu) => mu,
            Backoff::Chord { slope, intercept } => slope * f64::from(b) + intercept,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UplinkConfig {
    /// Antennas `M`.
    pub m: usize,
    /// Users `K`.
    pub k: usize,
    /// Coherence block length `T` in symbols.
    pub coherence: usize,
    /// Training length `tau` in symbols.
    pub tau: usize,
    pub p_u: f64,
    pub p_n: f64,
    /// Large-scale gains, one per user.
    pub beta: Vec<f64>,
    /// ADC resolution.
    pub b: u32,
    pub backoff: Backoff,
    pub receiver: Receiver,
    /// Bandwidth in Hz.
    pub bandwidth: f64,
    pub mode: Mode,
    pub pqn_noise: PqnNoise,
    /// Data symbols per trial in hardware mode.
    pub hardware_symbols: usize,
}

impl UplinkConfig {
    /// `M` antennas, `K` users with unit gains, `T` symbols of coherence, minimal training
    /// (`tau = K`), 0 dB SNR, 8-bit ADCs on the bundled calibration chord, ZF, 20 MHz, PQN.
    pub fn new(m: usize, k: usize, coherence: usize) -> Self {
        Self {
            m,
            k,
            coherence,
            tau: k,
            p_u: 1.0,
            p_n: 1.0,
            beta: vec![1.0; k],
            b: 8,
            backoff: Backoff::from_calibration(&BackoffCalibration::bundled()),
            receiver: Receiver::Zf,
            bandwidth: 20e6,
            mode: Mode::Pqn,
            pqn_noise: PqnNoise::Uniform,
            hardware_symbols: 1000,
        }
    }

    pub fn snr(&self) -> f64 {
        self.p_u / self.p_n
    }

    /// Sets `p_n = p_u / snr` from an SNR in dB.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.p_n = self.p_u / 10f64.powf(snr_db / 10.0);
        self
    }

    pub fn with_bits(mut self, b: u32) -> Self {
        self.b = b;
        self
    }

    pub fn with_receiver(mut self, receiver: Receiver) -> Self {
        self.receiver = receiver;
        self
    }

    pub fn with_tau(mut self, tau: usize) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_backoff(mut self, backoff: Backoff) -> Self {
        self.backoff = backoff;
        self
    }

    /// Backoff applied at the configured resolution.
    pub fn mu(&self) -> f64 {
        self.backoff.at(self.b)
    }

    /// Every violated invariant, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.k < 1 {
            v.push(format!("K must be >= 1, got {}", self.k));
        }
        if self.m < self.k {
            v.push(format!("M ({}) must be >= K ({})", self.m, self.k));
        }
        if self.tau < self.k {
            v.push(format!("tau ({}) must be >= K ({})", self.tau, self.k));
        }
        if self.tau > self.coherence {
            v.push(format!(
                "tau ({}) must be <= T ({})",
                self.tau, self.coherence
            ));
        }
        if !(self.p_u > 0.0) || !self.p_u.is_finite() {
            v.push(format!("p_u must be > 0, got {}", self.p_u));
        }
        if !(self.p_n > 0.0) || !self.p_n.is_finite() {
            v.push(format!("p_n must be > 0, got {}", self.p_n));
        }
        if self.beta.len() != self.k {
            v.push(format!(
                "beta has {} entries, expected K = {}",
                self.beta.len(),
                self.k
            ));
        }
        if self.beta.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            v.push("every beta_k must be > 0".to_string());
        }
        if !(1..=crate::quantizer::MAX_BITS).contains(&self.b) {
            v.push(format!(
                "b must be in [1, {}], got {}",
                crate::quantizer::MAX_BITS,
                self.b
            ));
        }
        let mu = self.mu();
        if !(mu > 0.0) || !mu.is_finite() {
            v.push(format!("backoff at b = {} must be > 0, got {mu}", self.b));
        }
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            v.push(format!("bandwidth must be > 0, got {}", self.bandwidth));
        }
        if self.mode == Mode::Hardware && self.hardware_symbols == 0 {
            v.push("hardware mode needs at least one data symbol per trial".to_string());
        }
        v
    }

    pub fn validate(&self) -> crate::Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }
}
