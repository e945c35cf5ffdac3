use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use super::{quantization_noise_variance, AgcState, Mode, PilotBlock, PqnNoise, UplinkConfig};
use crate::linalg::CMat;
use crate::quantizer::{make_quantizer, QuantizerSpec};
use crate::rng::CounterRng;
use crate::{Error, Result};

/// Least-squares estimate `Z Phi^dagger` from one received pilot block.
///
/// Draw order on `rng`: the thermal block `N` (M x tau, row-major, real part first, unit
/// variance before scaling by `gamma p_n`), then in PQN mode the quantization block `Xi`
/// (two uniforms, or two normals for [`PqnNoise::Gaussian`], per entry). The standard draws
/// do not depend on `b`, so changing only the resolution rescales the same noise.
pub fn estimate_channel(
    cfg: &UplinkConfig,
    htilde: ArrayView2<'_, Complex64>,
    pilots: &PilotBlock,
    agc: &AgcState,
    rng: &mut CounterRng,
) -> Result<CMat> {
    let (m, k) = htilde.dim();
    let tau = pilots.phi.ncols();
    if m != cfg.m || k != cfg.k || pilots.phi.nrows() != k || tau != cfg.tau {
        return Err(Error::DimensionMismatch(format!(
            "channel {m}x{k}, pilots {}x{tau}, config M = {}, K = {}, tau = {}",
            pilots.phi.nrows(),
            cfg.m,
            cfg.k,
            cfg.tau
        )));
    }

    let noise_amp = (0.5 * agc.gamma * cfg.p_n).sqrt();
    let mut z = htilde.dot(&pilots.phi);
    for v in z.iter_mut() {
        let (re, im) = (rng.normal(), rng.normal());
        *v += Complex64::new(noise_amp * re, noise_amp * im);
    }

    match cfg.mode {
        Mode::Pqn => add_pqn(
            &mut z,
            quantization_noise_variance(cfg.b),
            cfg.pqn_noise,
            rng,
        ),
        Mode::Hardware => {
            let q = make_quantizer(cfg.b, 1.0)?;
            quantize_complex(&mut z, &q);
        }
    }
    Ok(z.dot(&pilots.pinv))
}

/// Adds i.i.d. complex noise of variance `p_q` (`p_q / 2` per real dimension).
pub(crate) fn add_pqn(z: &mut CMat, p_q: f64, dist: PqnNoise, rng: &mut CounterRng) {
    match dist {
        PqnNoise::Uniform => {
            // uniform on [-a, a] has variance a^2 / 3
            let a = (1.5 * p_q).sqrt();
            for v in z.iter_mut() {
                let re = a * (2.0 * rng.uniform() - 1.0);
                let im = a * (2.0 * rng.uniform() - 1.0);
                *v += Complex64::new(re, im);
            }
        }
        PqnNoise::Gaussian => {
            let s = (0.5 * p_q).sqrt();
            for v in z.iter_mut() {
                let (re, im) = (rng.normal(), rng.normal());
                *v += Complex64::new(s * re, s * im);
            }
        }
    }
}

/// Quantizes real and imaginary parts independently.
pub(crate) fn quantize_complex(z: &mut Array2<Complex64>, q: &QuantizerSpec) {
    for v in z.iter_mut() {
        *v = Complex64::new(q.quantize(v.re), q.quantize(v.im));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uplink::{agc_gain, draw_channel, generate_pilots, Backoff};

    fn error_variance(cfg: &UplinkConfig, trials: u64) -> f64 {
        let agc = agc_gain(cfg.mu(), cfg.p_u, &cfg.beta, cfg.p_n).unwrap();
        let pilots = generate_pilots(cfg.k, cfg.tau, cfg.p_u).unwrap();
        let mut acc = 0.0;
        for t in 0..trials {
            let mut rng = CounterRng::at(77, &[t]);
            let ch = draw_channel(cfg.m, cfg.k, &cfg.beta, &agc, &mut rng);
            let hhat = estimate_channel(cfg, ch.htilde.view(), &pilots, &agc, &mut rng).unwrap();
            acc += (&hhat - &ch.htilde)
                .iter()
                .map(|v| v.norm_sqr())
                .sum::<f64>();
        }
        acc / (trials as usize * cfg.m * cfg.k) as f64
    }

    #[test]
    fn noiseless_high_resolution_is_exact() {
        let mut cfg = UplinkConfig::new(8, 3, 100).with_bits(30).with_tau(5);
        cfg.p_n = 1e-300;
        let agc = agc_gain(cfg.mu(), cfg.p_u, &cfg.beta, cfg.p_n).unwrap();
        let pilots = generate_pilots(3, 5, 1.0).unwrap();
        let mut rng = CounterRng::new(1);
        let ch = draw_channel(8, 3, &cfg.beta, &agc, &mut rng);
        let hhat = estimate_channel(&cfg, ch.htilde.view(), &pilots, &agc, &mut rng).unwrap();
        let err = (&hhat - &ch.htilde)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "max error {err}");
    }

    #[test]
    fn pqn_error_variance_matches_prediction() {
        let cfg = UplinkConfig::new(16, 4, 200)
            .with_tau(6)
            .with_bits(3)
            .with_backoff(Backoff::Fixed(9.0))
            .with_snr_db(5.0);
        let agc = agc_gain(cfg.mu(), cfg.p_u, &cfg.beta, cfg.p_n).unwrap();
        let expected =
            (agc.gamma * cfg.p_n + quantization_noise_variance(cfg.b)) / (cfg.p_u * cfg.tau as f64);
        let measured = error_variance(&cfg, 2000);
        assert!(
            (measured / expected - 1.0).abs() < 0.03,
            "{measured} vs {expected}"
        );
    }

    #[test]
    fn hardware_estimate_lies_on_quantized_block() {
        let cfg = UplinkConfig::new(6, 2, 50)
            .with_bits(2)
            .with_mode(Mode::Hardware)
            .with_tau(2);
        let agc = agc_gain(cfg.mu(), cfg.p_u, &cfg.beta, cfg.p_n).unwrap();
        let pilots = generate_pilots(2, 2, 1.0).unwrap();
        let mut rng = CounterRng::new(5);
        let ch = draw_channel(6, 2, &cfg.beta, &agc, &mut rng);
        let hhat = estimate_channel(&cfg, ch.htilde.view(), &pilots, &agc, &mut rng).unwrap();
        // Z = Hhat Phi must be quantized entrywise
        let z = hhat.dot(&pilots.phi);
        for v in z.iter() {
            for part in [v.re, v.im] {
                assert!(
                    [-0.75, -0.25, 0.25, 0.75]
                        .iter()
                        .any(|l| (part - l).abs() < 1e-12),
                    "{part}"
                );
            }
        }
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let cfg = UplinkConfig::new(6, 2, 50);
        let agc = agc_gain(cfg.mu(), 1.0, &cfg.beta, 1.0).unwrap();
        let pilots = generate_pilots(3, 3, 1.0).unwrap();
        let h = Array2::zeros((6, 2));
        let mut rng = CounterRng::new(0);
        assert!(matches!(
            estimate_channel(&cfg, h.view(), &pilots, &agc, &mut rng),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
