//! Small dense complex linear algebra on top of `ndarray`.
//!
//! Large products go through `ndarray::dot` (matrixmultiply's zgemm). The only factorisation
//! needed is a Cholesky inverse of the K x K Hermitian Gram matrices used by ZF and the pilot
//! pseudoinverse, so it is implemented here rather than pulling in LAPACK.

use ndarray::{Array2, ArrayView2, Axis};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMat = Array2<Complex64>;

/// Conjugate transpose, materialised in standard layout.
pub fn hermitian(a: ArrayView2<'_, Complex64>) -> CMat {
    let mut out = Array2::zeros((a.ncols(), a.nrows()));
    for ((i, j), v) in a.indexed_iter() {
        out[[j, i]] = v.conj();
    }
    out
}

/// `A^H B`.
pub fn herm_dot(a: ArrayView2<'_, Complex64>, b: ArrayView2<'_, Complex64>) -> CMat {
    hermitian(a).dot(&b)
}

/// `A^H A`.
pub fn gram(a: ArrayView2<'_, Complex64>) -> CMat {
    herm_dot(a, a)
}

pub fn identity(n: usize) -> CMat {
    Array2::from_diag_elem(n, Complex64::new(1.0, 0.0))
}

/// Largest entrywise modulus of `A - I`.
pub fn distance_from_identity(a: ArrayView2<'_, Complex64>) -> f64 {
    a.indexed_iter()
        .map(|((i, j), v)| {
            let target = if i == j { 1.0 } else { 0.0 };
            (v - target).norm()
        })
        .fold(0.0, f64::max)
}

/// Max over columns of the column 1-norm.
pub fn norm1(a: ArrayView2<'_, Complex64>) -> f64 {
    a.axis_iter(Axis(1))
        .map(|col| col.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Squared Euclidean norm of each column.
pub fn column_norms_sqr(a: ArrayView2<'_, Complex64>) -> Vec<f64> {
    a.axis_iter(Axis(1))
        .map(|col| col.iter().map(|v| v.norm_sqr()).sum())
        .collect()
}

/// `a_k^H b_k` for every column pair.
pub fn column_inner(a: ArrayView2<'_, Complex64>, b: ArrayView2<'_, Complex64>) -> Vec<Complex64> {
    a.axis_iter(Axis(1))
        .zip(b.axis_iter(Axis(1)))
        .map(|(x, y)| x.iter().zip(y.iter()).map(|(u, v)| u.conj() * v).sum())
        .collect()
}

/// Inverse of a Hermitian positive-definite matrix together with its 1-norm condition number.
#[derive(Debug, Clone)]
pub struct HermitianInverse {
    pub inverse: CMat,
    pub condition: f64,
}

/// Cholesky-based inverse. Fails with [`Error::SingularChannel`] when the factorisation breaks
/// down or the 1-norm condition number exceeds `max_condition`.
pub fn hermitian_inverse(
    g: ArrayView2<'_, Complex64>,
    max_condition: f64,
) -> Result<HermitianInverse> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "Gram matrix must be square, got {}x{}",
            n,
            g.ncols()
        )));
    }
    let singular = || Error::SingularChannel {
        condition: f64::INFINITY,
    };

    // G = L L^H
    let mut l = Array2::<Complex64>::zeros((n, n));
    for j in 0..n {
        let mut d = g[[j, j]].re;
        for p in 0..j {
            d -= l[[j, p]].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(singular());
        }
        let djj = d.sqrt();
        l[[j, j]] = Complex64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = g[[i, j]];
            for p in 0..j {
                s -= l[[i, p]] * l[[j, p]].conj();
            }
            l[[i, j]] = s / djj;
        }
    }

    // L^{-1}, lower triangular.
    let mut linv = Array2::<Complex64>::zeros((n, n));
    for j in 0..n {
        linv[[j, j]] = Complex64::new(1.0 / l[[j, j]].re, 0.0);
        for i in (j + 1)..n {
            let mut s = Complex64::new(0.0, 0.0);
            for p in j..i {
                s -= l[[i, p]] * linv[[p, j]];
            }
            linv[[i, j]] = s / l[[i, i]].re;
        }
    }

    let inverse = herm_dot(linv.view(), linv.view());
    let condition = norm1(g) * norm1(inverse.view());
    if !condition.is_finite() || condition > max_condition {
        return Err(Error::SingularChannel { condition });
    }
    Ok(HermitianInverse { inverse, condition })
}

/// Right pseudoinverse `Phi^H (Phi Phi^H)^{-1}` of a full-row-rank matrix.
pub fn right_pseudoinverse(phi: ArrayView2<'_, Complex64>) -> Result<CMat> {
    let phi_h = hermitian(phi);
    let inner = phi.dot(&phi_h);
    let inv = hermitian_inverse(inner.view(), 1e12)?;
    Ok(phi_h.dot(&inv.inverse))
}
