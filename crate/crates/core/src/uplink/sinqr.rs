use ndarray::ArrayView2;
use num_complex::Complex64;

use super::{
    draw_channel, empirical_sinqr, estimate_channel, quantization_noise_variance, receiver_matrix,
    AgcState, Mode, PilotBlock, UplinkConfig,
};
use crate::linalg::{column_inner, column_norms_sqr, herm_dot, CMat};
use crate::rng::CounterRng;
use crate::{Error, Result};

/// Everything one Monte Carlo trial produces on the way to its SINQR values.
#[derive(Debug, Clone)]
pub struct TrialWorkspace {
    /// Effective post-AGC channel the trial was drawn with.
    pub htilde: CMat,
    pub hhat: CMat,
    /// Combiner built from the true channel.
    pub a_true: CMat,
    /// Combiner built from the estimate.
    pub a_hat: CMat,
    pub p_q: f64,
    /// Post-AGC thermal variance `gamma p_n`.
    pub p_n_eff: f64,
    pub sinqr: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum TrialOutcome {
    Kept(Box<TrialWorkspace>),
    /// A Gram matrix exceeded the condition limit; the trial does not enter the mean.
    Singular {
        condition: f64,
    },
}

/// Conditional SINQR of every user given the realization.
///
/// The wanted signal uses the true combiner `a_k`; the mismatch `(a_hat_k - a_k)^H h_k`,
/// multi-user interference and filtered noise `||a_hat_k||^2 (gamma p_n + p_q)` form the
/// denominator.
pub fn sinqr_semi_analytic(
    ws: &TrialWorkspace,
    htilde: ArrayView2<'_, Complex64>,
    cfg: &UplinkConfig,
) -> Vec<f64> {
    let cross = herm_dot(ws.a_hat.view(), htilde);
    let wanted = column_inner(ws.a_true.view(), htilde);
    let filt = column_norms_sqr(ws.a_hat.view());
    let noise_var = ws.p_n_eff + ws.p_q;
    (0..cfg.k)
        .map(|k| {
            let interference: f64 = (0..cfg.k)
                .filter(|&j| j != k)
                .map(|j| cross[[k, j]].norm_sqr())
                .sum();
            let mismatch = (cross[[k, k]] - wanted[k]).norm_sqr();
            let signal = cfg.p_u * wanted[k].norm_sqr();
            signal / (cfg.p_u * (interference + mismatch) + filt[k] * noise_var)
        })
        .collect()
}

/// One full trial on the matrix path: channel, pilot phase, both combiners, SINQR.
///
/// Draw order: channel, estimation noise, then (hardware mode only) the data symbols.
pub fn run_trial(
    cfg: &UplinkConfig,
    pilots: &PilotBlock,
    agc: &AgcState,
    rng: &mut CounterRng,
) -> Result<TrialOutcome> {
    let ch = draw_channel(cfg.m, cfg.k, &cfg.beta, agc, rng);
    let hhat = estimate_channel(cfg, ch.htilde.view(), pilots, agc, rng)?;
    let combiners = receiver_matrix(ch.htilde.view(), cfg.receiver)
        .and_then(|a| Ok((a, receiver_matrix(hhat.view(), cfg.receiver)?)));
    let (a_true, a_hat) = match combiners {
        Ok(pair) => pair,
        Err(Error::SingularChannel { condition }) => {
            return Ok(TrialOutcome::Singular { condition })
        }
        Err(e) => return Err(e),
    };
    let mut ws = TrialWorkspace {
        htilde: ch.htilde,
        hhat,
        a_true,
        a_hat,
        p_q: quantization_noise_variance(cfg.b),
        p_n_eff: agc.gamma * cfg.p_n,
        sinqr: Vec::new(),
    };
    ws.sinqr = match cfg.mode {
        Mode::Pqn => sinqr_semi_analytic(&ws, ws.htilde.view(), cfg),
        Mode::Hardware => empirical_sinqr(cfg, &ws, agc, cfg.hardware_symbols, rng)?,
    };
    Ok(TrialOutcome::Kept(Box::new(ws)))
}
