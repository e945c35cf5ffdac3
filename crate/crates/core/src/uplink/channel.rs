use ndarray::Array2;

use crate::linalg::CMat;
use crate::rng::CounterRng;
use crate::{Error, Result};

/// AGC setting shared by every receive chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgcState {
    /// Power gain per I/Q branch.
    pub gamma: f64,
    pub mu_used: f64,
}

/// `gamma = 2 / (mu (p_u sum(beta) + p_n))`, using the received power averaged over small- and
/// large-scale fading, so each I/Q branch sees power `1 / mu` at the ADC.
pub fn agc_gain(mu: f64, p_u: f64, beta: &[f64], p_n: f64) -> Result<AgcState> {
    let positive = |x: f64| x > 0.0 && x.is_finite();
    if !positive(mu) || !positive(p_u) || !positive(p_n) {
        return Err(Error::invalid(format!(
            "AGC inputs must be positive: mu = {mu}, p_u = {p_u}, p_n = {p_n}"
        )));
    }
    if beta.is_empty() || !beta.iter().all(|&b| positive(b)) {
        return Err(Error::invalid(
            "large-scale gains must be non-empty and positive",
        ));
    }
    let received = p_u * beta.iter().sum::<f64>() + p_n;
    Ok(AgcState {
        gamma: 2.0 / (mu * received),
        mu_used: mu,
    })
}

#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Small-scale fading, i.i.d. CN(0, 1).
    pub h: CMat,
    /// Effective post-AGC channel `sqrt(gamma) H diag(sqrt(beta))`.
    pub htilde: CMat,
}

/// Draws `H` entry by entry in row-major order (antenna outer, user inner), real part first.
pub fn draw_channel(
    m: usize,
    k: usize,
    beta: &[f64],
    agc: &AgcState,
    rng: &mut CounterRng,
) -> ChannelRealization {
    assert_eq!(beta.len(), k, "one large-scale gain per user");
    let h: CMat = Array2::from_shape_fn((m, k), |_| rng.complex_normal(1.0));
    let amp: Vec<f64> = beta.iter().map(|b| (agc.gamma * b).sqrt()).collect();
    let htilde = Array2::from_shape_fn((m, k), |(i, j)| h[[i, j]] * amp[j]);
    ChannelRealization { h, htilde }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_examples() {
        let g = agc_gain(4.0, 1.0, &[1.0; 10], 1.0).unwrap();
        assert!((g.gamma - 1.0 / 22.0).abs() < 1e-15);
        let g = agc_gain(2.0, 1.0, &[1.0], 1.0).unwrap();
        assert_eq!(g.gamma, 0.5);
        let a = agc_gain(3.0, 0.7, &[1.0, 0.5], 0.2).unwrap();
        let b = agc_gain(3.0, 1.4, &[1.0, 0.5], 0.4).unwrap();
        assert!((a.gamma - 2.0 * b.gamma).abs() < 1e-15);
    }

    #[test]
    fn gain_rejects_nonpositive() {
        assert!(agc_gain(0.0, 1.0, &[1.0], 1.0).is_err());
        assert!(agc_gain(1.0, 1.0, &[1.0, -1.0], 1.0).is_err());
        assert!(agc_gain(1.0, 1.0, &[1.0], 0.0).is_err());
    }

    #[test]
    fn unit_scaling_is_identity() {
        let agc = AgcState {
            gamma: 1.0,
            mu_used: 1.0,
        };
        let mut rng = CounterRng::new(3);
        let c = draw_channel(6, 3, &[1.0; 3], &agc, &mut rng);
        assert_eq!(c.h, c.htilde);
    }

    #[test]
    fn same_stream_same_channel() {
        let agc = agc_gain(10.0, 1.0, &[1.0, 2.0], 1.0).unwrap();
        let a = draw_channel(5, 2, &[1.0, 2.0], &agc, &mut CounterRng::new(9));
        let b = draw_channel(5, 2, &[1.0, 2.0], &agc, &mut CounterRng::new(9));
        assert_eq!(a.htilde, b.htilde);
    }

    #[test]
    fn effective_channel_power_per_user() {
        let beta = [1.0, 0.25, 3.0];
        let agc = agc_gain(8.0, 1.0, &beta, 0.5).unwrap();
        let (m, draws) = (10usize, 10_000u64);
        let mut acc = [0.0; 3];
        for t in 0..draws {
            let mut rng = CounterRng::at(1, &[t]);
            let c = draw_channel(m, 3, &beta, &agc, &mut rng);
            for (k, a) in acc.iter_mut().enumerate() {
                *a += c.htilde.column(k).iter().map(|v| v.norm_sqr()).sum::<f64>();
            }
        }
        for k in 0..3 {
            let mean = acc[k] / (m as f64 * draws as f64);
            let expected = agc.gamma * beta[k];
            assert!(
                (mean / expected - 1.0).abs() < 0.02,
                "user {k}: {mean} vs {expected}"
            );
        }
    }
}
