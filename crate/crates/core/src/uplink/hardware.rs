//! Bit-true data phase: symbols pass through the actual quantizer instead of the PQN model.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use num_complex::Complex64;

use super::estimation::quantize_complex;
use super::{AgcState, TrialWorkspace, UplinkConfig};
use crate::linalg::{column_inner, herm_dot};
use crate::quantizer::{make_quantizer, QuantizerSpec};
use crate::rng::CounterRng;
use crate::Result;

/// Symbols processed per matrix product in [`empirical_sinqr`].
const CHUNK: usize = 256;

/// One data symbol followed through the receive chain.
#[derive(Debug, Clone)]
pub struct SignalTrace {
    /// User symbols, CN(0, 1).
    pub x: Array1<Complex64>,
    /// Antenna signal before the AGC.
    pub y: Array1<Complex64>,
    pub ytilde: Array1<Complex64>,
    /// ADC output.
    pub z: Array1<Complex64>,
    /// Thermal noise before the AGC, CN(0, p_n).
    pub n: Array1<Complex64>,
    /// Measured distortion `z - ytilde`.
    pub q: Array1<Complex64>,
    pub xhat: Array1<Complex64>,
    /// Residual after removing the wanted part `sqrt(p_u) a_k^H h_k x_k`.
    pub w: Array1<Complex64>,
}

/// Transmits one symbol vector. Draws `x` (K values) then `n` (M values).
pub fn transmit_symbol(
    cfg: &UplinkConfig,
    ws: &TrialWorkspace,
    agc: &AgcState,
    quantizer: &QuantizerSpec,
    rng: &mut CounterRng,
) -> SignalTrace {
    let sqrt_pu = cfg.p_u.sqrt();
    let sqrt_g = agc.gamma.sqrt();
    let x: Array1<Complex64> = (0..cfg.k).map(|_| rng.complex_normal(1.0)).collect();
    let n: Array1<Complex64> = (0..cfg.m).map(|_| rng.complex_normal(cfg.p_n)).collect();
    let ytilde = ws.htilde.dot(&x).mapv(|v| v * sqrt_pu) + n.mapv(|v| v * sqrt_g);
    let y = ytilde.mapv(|v| v / sqrt_g);
    let z = ytilde.mapv(|v| Complex64::new(quantizer.quantize(v.re), quantizer.quantize(v.im)));
    let q = &z - &ytilde;
    let xhat = ws.a_hat.t().mapv(|v| v.conj()).dot(&z);
    let gains = column_inner(ws.a_true.view(), ws.htilde.view());
    let w = Array1::from_shape_fn(cfg.k, |k| xhat[k] - gains[k] * sqrt_pu * x[k]);
    SignalTrace {
        x,
        y,
        ytilde,
        z,
        n,
        q,
        xhat,
        w,
    }
}

/// Measured SINQR over `n_symbols` data symbols: `p_u |a_k^H h_k|^2` over the sample power of
/// the residual `w_k`. Uses the same draw order as repeated [`transmit_symbol`] calls, in
/// blocks so the combining is a matrix product.
pub fn empirical_sinqr(
    cfg: &UplinkConfig,
    ws: &TrialWorkspace,
    agc: &AgcState,
    n_symbols: usize,
    rng: &mut CounterRng,
) -> Result<Vec<f64>> {
    let quantizer = make_quantizer(cfg.b, 1.0)?;
    let (m, k) = (cfg.m, cfg.k);
    let sqrt_pu = cfg.p_u.sqrt();
    let sqrt_g = agc.gamma.sqrt();
    let gains = column_inner(ws.a_true.view(), ws.htilde.view());
    let mut residual = vec![0.0; k];

    let mut done = 0;
    while done < n_symbols {
        let c = CHUNK.min(n_symbols - done);
        let mut x = Array2::<Complex64>::zeros((k, c));
        let mut noise = Array2::<Complex64>::zeros((m, c));
        for s in 0..c {
            for v in x.column_mut(s) {
                *v = rng.complex_normal(1.0);
            }
            for v in noise.column_mut(s) {
                *v = rng.complex_normal(cfg.p_n) * sqrt_g;
            }
        }
        let mut z = ws.htilde.dot(&x);
        z.zip_mut_with(&noise, |zv, nv| *zv = *zv * sqrt_pu + nv);
        quantize_complex(&mut z, &quantizer);
        let xhat = herm_dot(ws.a_hat.view(), z.view());
        accumulate_residual(&mut residual, xhat.view(), x.view(), &gains, sqrt_pu);
        done += c;
    }
    let n = n_symbols as f64;
    Ok(gains
        .iter()
        .zip(&residual)
        .map(|(g, r)| cfg.p_u * g.norm_sqr() / (r / n))
        .collect())
}

fn accumulate_residual(
    acc: &mut [f64],
    xhat: ArrayView2<'_, Complex64>,
    x: ArrayView2<'_, Complex64>,
    gains: &[Complex64],
    sqrt_pu: f64,
) {
    for (k, (row_hat, row_x)) in xhat
        .axis_iter(Axis(0))
        .zip(x.axis_iter(Axis(0)))
        .enumerate()
    {
        let g = gains[k] * sqrt_pu;
        acc[k] += row_hat
            .iter()
            .zip(row_x.iter())
            .map(|(a, b)| (a - g * b).norm_sqr())
            .sum::<f64>();
    }
}
