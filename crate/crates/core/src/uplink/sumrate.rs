use rayon::prelude::*;

use super::batch::{validate_points, OperatingPoint, TrialGram};
use super::{agc_gain, generate_pilots, run_trial, Mode, Receiver, TrialOutcome, UplinkConfig};
use crate::rng::CounterRng;
use crate::{Error, Result};

const TRIAL_STREAM: u64 = 0x0054_5249_414c;

/// Trials per work unit. Fixed so the reduction order never depends on the thread count.
const TRIAL_CHUNK: u64 = 16;

/// Random stream of trial `t` under master seed `seed`.
pub fn trial_rng(seed: u64, t: u64) -> CounterRng {
    CounterRng::at(seed, &[TRIAL_STREAM, t])
}

/// Monte Carlo averages over the kept trials, before the overhead and bandwidth prefactor.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialAverage {
    /// Mean of `sum_k log2(1 + SINQR_k)` in bits/s/Hz.
    pub sum_spectral_efficiency: f64,
    pub mean_sinqr: Vec<f64>,
    pub trials_used: u64,
    pub trials_discarded: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumrateResult {
    /// `B (T - tau) / T` times the mean sum spectral efficiency, in bits/s.
    pub sumrate: f64,
    pub sum_spectral_efficiency: f64,
    pub mean_sinqr: Vec<f64>,
    pub trials_used: u64,
    pub trials_discarded: u64,
}

impl SumrateResult {
    pub fn from_average(avg: TrialAverage, bandwidth: f64, coherence: usize, tau: usize) -> Self {
        let overhead = (coherence - tau.min(coherence)) as f64 / coherence as f64;
        Self {
            sumrate: bandwidth * overhead * avg.sum_spectral_efficiency,
            sum_spectral_efficiency: avg.sum_spectral_efficiency,
            mean_sinqr: avg.mean_sinqr,
            trials_used: avg.trials_used,
            trials_discarded: avg.trials_discarded,
        }
    }
}

#[derive(Debug, Clone)]
struct Accumulator {
    sum_se: f64,
    sinqr: Vec<f64>,
    used: u64,
    discarded: u64,
}

impl Accumulator {
    fn new(k: usize) -> Self {
        Self {
            sum_se: 0.0,
            sinqr: vec![0.0; k],
            used: 0,
            discarded: 0,
        }
    }

    fn push(&mut self, sinqr: Option<&[f64]>) {
        match sinqr {
            Some(s) => {
                self.sum_se += s.iter().map(|v| v.ln_1p()).sum::<f64>() / std::f64::consts::LN_2;
                for (a, v) in self.sinqr.iter_mut().zip(s) {
                    *a += v;
                }
                self.used += 1;
            }
            None => self.discarded += 1,
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        self.sum_se += other.sum_se;
        for (a, v) in self.sinqr.iter_mut().zip(&other.sinqr) {
            *a += v;
        }
        self.used += other.used;
        self.discarded += other.discarded;
    }

    fn finish(self) -> Result<TrialAverage> {
        if self.used == 0 {
            return Err(Error::SimulationFailure(format!(
                "all {} trials were singular",
                self.discarded
            )));
        }
        let n = self.used as f64;
        Ok(TrialAverage {
            sum_spectral_efficiency: self.sum_se / n,
            mean_sinqr: self.sinqr.into_iter().map(|v| v / n).collect(),
            trials_used: self.used,
            trials_discarded: self.discarded,
        })
    }
}

/// Runs `n_trials` in fixed-size chunks on the current rayon pool, each chunk folding
/// into one accumulator per output slot, then merges chunks in index order.
fn chunked<F>(n_trials: u64, slots: usize, k: usize, trial: F) -> Result<Vec<Accumulator>>
where
    F: Fn(u64, &mut [Accumulator]) -> Result<()> + Sync,
{
    let n_chunks = n_trials.div_ceil(TRIAL_CHUNK);
    let parts: Vec<Result<Vec<Accumulator>>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Accumulator::new(k); slots];
            for t in c * TRIAL_CHUNK..((c + 1) * TRIAL_CHUNK).min(n_trials) {
                trial(t, &mut acc)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![Accumulator::new(k); slots];
    for part in parts {
        for (t, p) in total.iter_mut().zip(&part?) {
            t.merge(p);
        }
    }
    Ok(total)
}

/// PQN-mode averages at several operating points sharing the same trials.
///
/// `base` supplies the geometry (M, K, tau), `p_u`, `beta` and the PQN distribution; each
/// point supplies `b`, the backoff, `p_n` and the receiver. Trial `t` uses [`trial_rng`]`(seed, t)`
/// for every point (common random numbers). A point whose trials are all singular yields
/// `Err(SimulationFailure)` in its slot.
pub fn ergodic_sumrate_points(
    base: &UplinkConfig,
    points: &[OperatingPoint],
    n_trials: u64,
    seed: u64,
) -> Result<Vec<Result<TrialAverage>>> {
    base.validate()?;
    validate_points(points)?;
    if n_trials == 0 {
        return Err(Error::invalid("n_trials must be >= 1"));
    }
    let pilots = generate_pilots(base.k, base.tau, base.p_u)?;
    let need_zf = points.iter().any(|p| p.receiver == Receiver::Zf);
    let sum_beta: f64 = base.beta.iter().sum();
    let acc = chunked(n_trials, points.len(), base.k, |t, acc| {
        let tg = TrialGram::draw(base, pilots.pinv.view(), need_zf, &mut trial_rng(seed, t));
        for (a, pt) in acc.iter_mut().zip(points) {
            a.push(tg.sinqr(base.p_u, sum_beta, pt).as_deref());
        }
        Ok(())
    })?;
    Ok(acc.into_iter().map(Accumulator::finish).collect())
}

/// Ergodic sumrate `B (T - tau) / T E[sum_k log2(1 + SINQR_k)]` over `n_trials` trials.
///
/// Deterministic in `(cfg, n_trials, seed)` and independent of the rayon thread count.
/// Singular trials are discarded and counted; if none survive the call fails.
pub fn ergodic_sumrate(cfg: &UplinkConfig, n_trials: u64, seed: u64) -> Result<SumrateResult> {
    let avg = ergodic_average(cfg, n_trials, seed)?;
    Ok(SumrateResult::from_average(
        avg,
        cfg.bandwidth,
        cfg.coherence,
        cfg.tau,
    ))
}

/// Trial averages behind [`ergodic_sumrate`], without the `B (T - tau) / T` prefactor.
pub fn ergodic_average(cfg: &UplinkConfig, n_trials: u64, seed: u64) -> Result<TrialAverage> {
    cfg.validate()?;
    if n_trials == 0 {
        return Err(Error::invalid("n_trials must be >= 1"));
    }
    match cfg.mode {
        Mode::Pqn => {
            let pt = OperatingPoint::from_config(cfg);
            ergodic_sumrate_points(cfg, &[pt], n_trials, seed)?.remove(0)
        }
        Mode::Hardware => {
            let pilots = generate_pilots(cfg.k, cfg.tau, cfg.p_u)?;
            let agc = agc_gain(cfg.mu(), cfg.p_u, &cfg.beta, cfg.p_n)?;
            let mut acc = chunked(n_trials, 1, cfg.k, |t, acc| {
                match run_trial(cfg, &pilots, &agc, &mut trial_rng(seed, t))? {
                    TrialOutcome::Kept(ws) => acc[0].push(Some(&ws.sinqr)),
                    TrialOutcome::Singular { .. } => acc[0].push(None),
                }
                Ok(())
            })?;
            acc.remove(0).finish()
        }
    }
}
