//! PQN-mode trials evaluated at many operating points from one set of random draws.
//!
//! In PQN mode the estimate is an exact linear combination
//! `Hhat = sqrt(gamma) G + sqrt(gamma p_n) E_n + sqrt(p_q) E_q` of the scaled channel
//! `G = H diag(sqrt(beta))` and the filtered unit-variance noise blocks `E_n = N Phi^dagger` and
//! `E_q = Xi Phi^dagger`. Every quantity the SINQR needs is a K x K form in the Gram matrix of
//! `[G | E_n | E_q]`, so changing `b`, the backoff, the SNR or the receiver costs only K x K
//! work per trial. The draws are made in the same order as on the matrix path, so both paths
//! see identical randomness.

use ndarray::{s, Array2, ArrayView2};
use num_complex::Complex64;

use super::{quantization_noise_variance, PqnNoise, Receiver, UplinkConfig, MAX_CONDITION};
use crate::linalg::{gram, hermitian_inverse, CMat};
use crate::rng::CounterRng;
use crate::{Error, Result};

/// Quantities that vary between points evaluated on the same trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub b: u32,
    /// AGC backoff used at this point.
    pub mu: f64,
    pub p_n: f64,
    pub receiver: Receiver,
}

impl OperatingPoint {
    pub fn from_config(cfg: &UplinkConfig) -> Self {
        Self {
            b: cfg.b,
            mu: cfg.mu(),
            p_n: cfg.p_n,
            receiver: cfg.receiver,
        }
    }
}

/// Per-trial Gram matrix of `[G | E_n | E_q]` (3K x 3K).
pub(crate) struct TrialGram {
    k: usize,
    w: CMat,
    /// ZF on the true channel is feasible for this draw.
    true_zf_ok: bool,
}

impl TrialGram {
    /// Draws one trial. Order: `H` (M x K), thermal block (M x tau), quantization block.
    pub(crate) fn draw(
        cfg: &UplinkConfig,
        pinv: ArrayView2<'_, Complex64>,
        need_zf: bool,
        rng: &mut CounterRng,
    ) -> Self {
        let (m, k, tau) = (cfg.m, cfg.k, cfg.tau);
        let amp: Vec<f64> = cfg.beta.iter().map(|b| b.sqrt()).collect();
        let mut v = Array2::<Complex64>::zeros((m, 3 * k));
        for i in 0..m {
            for j in 0..k {
                v[[i, j]] = rng.complex_normal(1.0) * amp[j];
            }
        }
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let noise = Array2::from_shape_fn((m, tau), |_| {
            let (re, im) = (rng.normal(), rng.normal());
            Complex64::new(half * re, half * im)
        });
        let xi = match cfg.pqn_noise {
            PqnNoise::Uniform => {
                let a = 1.5f64.sqrt();
                Array2::from_shape_fn((m, tau), |_| {
                    let re = a * (2.0 * rng.uniform() - 1.0);
                    let im = a * (2.0 * rng.uniform() - 1.0);
                    Complex64::new(re, im)
                })
            }
            PqnNoise::Gaussian => Array2::from_shape_fn((m, tau), |_| {
                let (re, im) = (rng.normal(), rng.normal());
                Complex64::new(half * re, half * im)
            }),
        };
        v.slice_mut(s![.., k..2 * k]).assign(&noise.dot(&pinv));
        v.slice_mut(s![.., 2 * k..]).assign(&xi.dot(&pinv));
        let w = gram(v.view());
        let true_zf_ok =
            !need_zf || hermitian_inverse(w.slice(s![..k, ..k]), MAX_CONDITION).is_ok();
        Self { k, w, true_zf_ok }
    }

    /// Conditional SINQR at one operating point, `None` if a combiner is singular.
    pub(crate) fn sinqr(&self, p_u: f64, sum_beta: f64, pt: &OperatingPoint) -> Option<Vec<f64>> {
        let k = self.k;
        let gamma = 2.0 / (pt.mu * (p_u * sum_beta + pt.p_n));
        let p_q = quantization_noise_variance(pt.b);
        let scale = [gamma.sqrt(), (gamma * pt.p_n).sqrt(), p_q.sqrt()];
        let block = |a: usize, b: usize| self.w.slice(s![a * k..(a + 1) * k, b * k..(b + 1) * k]);

        // Hhat^H Hhat and Hhat^H Htilde
        let mut g_hat = Array2::<Complex64>::zeros((k, k));
        let mut cross = Array2::<Complex64>::zeros((k, k));
        for a in 0..3 {
            for b in 0..3 {
                g_hat.scaled_add(Complex64::from(scale[a] * scale[b]), &block(a, b));
            }
            cross.scaled_add(Complex64::from(scale[a] * scale[0]), &block(a, 0));
        }
        let noise_var = gamma * pt.p_n + p_q;

        let (f, wanted, filt): (CMat, Vec<f64>, Vec<f64>) = match pt.receiver {
            Receiver::Mrc => {
                let wanted = (0..k).map(|j| gamma * self.w[[j, j]].re).collect();
                let filt = (0..k).map(|j| g_hat[[j, j]].re).collect();
                (cross, wanted, filt)
            }
            Receiver::Zf => {
                if !self.true_zf_ok {
                    return None;
                }
                let inv = hermitian_inverse(g_hat.view(), MAX_CONDITION).ok()?.inverse;
                let filt = (0..k).map(|j| inv[[j, j]].re).collect();
                (inv.dot(&cross), vec![1.0; k], filt)
            }
        };
        Some(
            (0..k)
                .map(|j| {
                    let row = f.row(j);
                    let interference: f64 =
                        row.iter().map(|v| v.norm_sqr()).sum::<f64>() - row[j].norm_sqr();
                    let mismatch = (row[j] - wanted[j]).norm_sqr();
                    p_u * wanted[j] * wanted[j]
                        / (p_u * (interference.max(0.0) + mismatch) + filt[j] * noise_var)
                })
                .collect(),
        )
    }
}

pub(crate) fn validate_points(points: &[OperatingPoint]) -> Result<()> {
    for pt in points {
        if !(1..=crate::quantizer::MAX_BITS).contains(&pt.b) {
            return Err(Error::invalid(format!(
                "b must be in [1, 30], got {}",
                pt.b
            )));
        }
        if !(pt.mu > 0.0 && pt.mu.is_finite()) || !(pt.p_n > 0.0 && pt.p_n.is_finite()) {
            return Err(Error::invalid(format!(
                "operating point needs mu > 0 and p_n > 0, got mu = {}, p_n = {}",
                pt.mu, pt.p_n
            )));
        }
    }
    Ok(())
}
