//! Uniform mid-rise scalar quantizer and its pseudo-quantization-noise (PQN) abstraction.
//!
//! A `b`-bit quantizer with overload point `X_ol` has `N_q = 2^b` levels spaced by
//! `delta = 2 X_ol / 2^b`, symmetric about zero with no level at zero. Cells are left-open and
//! right-closed: `x` in `(T_{i-1}, T_i]` maps to level `i`, everything at or below the first
//! threshold maps to the bottom level and everything above the last threshold to the top level.

use rayon::prelude::*;

use crate::rng::CounterRng;
use crate::{Error, Result};

/// Largest supported resolution. Level indices stay exact in `f64` far beyond this.
pub const MAX_BITS: u32 = 30;

/// Minimum sample count accepted by [`measure_distortion_stats`].
pub const MIN_SAMPLES: usize = 100_000;

const SAMPLE_BLOCK: usize = 1 << 16;
const SAMPLE_STREAM: u64 = 0x5154_5a00;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    bits: u32,
    overload: f64,
    levels: u64,
    delta: f64,
}

pub fn make_quantizer(bits: u32, overload: f64) -> Result<QuantizerSpec> {
    check_params(bits, overload)?;
    let levels = 1u64 << bits;
    Ok(QuantizerSpec {
        bits,
        overload,
        levels,
        delta: 2.0 * overload / levels as f64,
    })
}

fn check_params(bits: u32, overload: f64) -> Result<()> {
    if !(1..=MAX_BITS).contains(&bits) {
        return Err(Error::invalid(format!(
            "resolution b = {bits} outside [1, {MAX_BITS}]"
        )));
    }
    if !(overload > 0.0) || !overload.is_finite() {
        return Err(Error::invalid(format!(
            "overload point must be finite and > 0, got {overload}"
        )));
    }
    Ok(())
}

impl QuantizerSpec {
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn overload(&self) -> f64 {
        self.overload
    }

    /// `N_q = 2^b`.
    pub fn n_levels(&self) -> u64 {
        self.levels
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Level `i` (0-based): `(i + 1) delta - (N_q + 1) delta / 2`.
    ///
    /// Evaluated as `(i + 1/2 - N_q/2) delta`, whose integer-plus-half factor is exact, so the
    /// levels are exactly antisymmetric.
    #[inline]
    pub fn level(&self, i: u64) -> f64 {
        debug_assert!(i < self.levels);
        (i as f64 + 0.5 - 0.5 * self.levels as f64) * self.delta
    }

    /// Threshold `i` (0-based, `i < N_q - 1`): upper edge of cell `i`, `level(i) + delta / 2`.
    #[inline]
    pub fn threshold(&self, i: u64) -> f64 {
        debug_assert!(i + 1 < self.levels);
        (i as f64 + 1.0 - 0.5 * self.levels as f64) * self.delta
    }

    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.levels).map(|i| self.level(i))
    }

    pub fn thresholds(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.levels - 1).map(|i| self.threshold(i))
    }

    /// Index of the cell containing `x`.
    #[inline]
    pub fn cell(&self, x: f64) -> u64 {
        // x in (T_{i-1}, T_i]  <=>  i < x / delta + N_q / 2 <= i + 1
        let t = (x / self.delta + 0.5 * self.levels as f64).ceil() - 1.0;
        let last = self.levels - 1;
        let mut i = if t <= 0.0 {
            0
        } else if t >= last as f64 {
            last
        } else {
            t as u64
        };
        // The division can round across a boundary; settle against the stored thresholds so
        // a threshold value always lands in the lower cell.
        if i > 0 && x <= self.threshold(i - 1) {
            i -= 1;
        } else if i < last && x > self.threshold(i) {
            i += 1;
        }
        i
    }

    #[inline]
    pub fn quantize(&self, x: f64) -> f64 {
        self.level(self.cell(x))
    }
}

/// `Q(x)` for the given quantizer.
#[inline]
pub fn quantize(spec: &QuantizerSpec, x: f64) -> f64 {
    spec.quantize(x)
}

/// PQN variance `X_ol^2 2^{-2b} / 3`, equal to `delta^2 / 12`.
pub fn pqn_variance(bits: u32, overload: f64) -> Result<f64> {
    check_params(bits, overload)?;
    Ok(overload * overload * (-2.0 * bits as f64).exp2() / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionStats {
    /// Sample `E{q^2}`.
    pub measured_var: f64,
    pub pqn_var: f64,
    /// `10 log10(|E{q^2} - pqn_var| / pqn_var)`.
    pub deviation_db: f64,
    /// `E{xq} / sqrt(E{x^2} E{q^2})`.
    pub rho_xq: f64,
    pub n_samples: usize,
}

/// Standard normal samples for a `(n, seed)` pair, reusable across `(b, mu)` evaluations.
///
/// Samples are produced in blocks of 65536; block `j` comes from
/// `CounterRng::at(seed, &[SAMPLE_STREAM, j])`, so generation may run in parallel without
/// changing the values.
#[derive(Debug, Clone)]
pub struct GaussianSamples {
    seed: u64,
    samples: Vec<f64>,
}

impl GaussianSamples {
    pub fn generate(n_samples: usize, seed: u64) -> Self {
        let mut samples = vec![0.0; n_samples];
        samples
            .par_chunks_mut(SAMPLE_BLOCK)
            .enumerate()
            .for_each(|(j, block)| {
                let mut rng = CounterRng::at(seed, &[SAMPLE_STREAM, j as u64]);
                for z in block.iter_mut() {
                    *z = rng.normal();
                }
            });
        Self { seed, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Distortion statistics of a `b`-bit quantizer with `X_ol = 1` fed with
    /// `N(0, 1/mu)` inputs.
    pub fn stats(&self, bits: u32, mu: f64) -> Result<DistortionStats> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::invalid(format!("backoff mu must be > 0, got {mu}")));
        }
        let q = make_quantizer(bits, 1.0)?;
        let scale = 1.0 / mu.sqrt();
        // per-block partial sums, reduced in block order
        let partials: Vec<[f64; 3]> = self
            .samples
            .par_chunks(SAMPLE_BLOCK)
            .map(|block| {
                let mut acc = [0.0f64; 3];
                for &z in block {
                    let x = z * scale;
                    let d = q.quantize(x) - x;
                    acc[0] += x * x;
                    acc[1] += d * d;
                    acc[2] += x * d;
                }
                acc
            })
            .collect();
        let mut sums = [0.0f64; 3];
        for p in &partials {
            for (s, v) in sums.iter_mut().zip(p) {
                *s += v;
            }
        }
        let n = self.samples.len() as f64;
        let (exx, eqq, exq) = (sums[0] / n, sums[1] / n, sums[2] / n);
        let pqn_var = pqn_variance(bits, 1.0)?;
        let denom = (exx * eqq).sqrt();
        Ok(DistortionStats {
            measured_var: eqq,
            pqn_var,
            deviation_db: 10.0 * ((eqq - pqn_var).abs() / pqn_var).log10(),
            rho_xq: if denom > 0.0 { exq / denom } else { 0.0 },
            n_samples: self.samples.len(),
        })
    }
}

/// Monte Carlo distortion statistics at backoff `mu = X_ol^2 / E{x^2}` (with `X_ol = 1`).
/// Deterministic for a fixed seed.
pub fn measure_distortion_stats(
    bits: u32,
    mu: f64,
    n_samples: usize,
    seed: u64,
) -> Result<DistortionStats> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::invalid(format!("backoff mu must be > 0, got {mu}")));
    }
    check_params(bits, 1.0)?;
    GaussianSamples::generate(n_samples, seed).stats(bits, mu)
}
