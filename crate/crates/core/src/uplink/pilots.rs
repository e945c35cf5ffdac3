use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::linalg::{right_pseudoinverse, CMat};
use crate::{Error, Result};

/// Orthogonal pilot block: `Psi` (K x tau, orthonormal rows), `Phi = sqrt(p_u tau) Psi` and its
/// right pseudoinverse.
#[derive(Debug, Clone)]
pub struct PilotBlock {
    pub psi: CMat,
    pub phi: CMat,
    pub pinv: CMat,
}

/// Rows `0..K` of the normalised `tau`-point DFT matrix,
/// `Psi[k, t] = exp(-2 pi i k t / tau) / sqrt(tau)`.
pub fn generate_pilots(k: usize, tau: usize, p_u: f64) -> Result<PilotBlock> {
    if k < 1 || tau < k {
        return Err(Error::invalid(format!(
            "pilots need 1 <= K <= tau, got K = {k}, tau = {tau}"
        )));
    }
    if !(p_u > 0.0) {
        return Err(Error::invalid(format!("p_u must be > 0, got {p_u}")));
    }
    let norm = 1.0 / (tau as f64).sqrt();
    let psi = Array2::from_shape_fn((k, tau), |(row, t)| {
        // reduce the exponent mod tau before scaling to keep the phase exact
        let idx = (row * t) % tau;
        Complex64::from_polar(norm, -2.0 * PI * idx as f64 / tau as f64)
    });
    let phi = psi.mapv(|v| v * (p_u * tau as f64).sqrt());
    let pinv = right_pseudoinverse(phi.view())?;
    Ok(PilotBlock { psi, phi, pinv })
}
