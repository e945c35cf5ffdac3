use ndarray::ArrayView2;
use num_complex::Complex64;

use super::{Receiver, MAX_CONDITION};
use crate::linalg::{gram, hermitian_inverse, CMat};
use crate::Result;

/// Linear combining matrix: MRC uses the channel itself, ZF its left pseudoinverse
/// transposed, `H (H^H H)^{-1}`. Fails with `SingularChannel` when the Gram matrix is
/// ill-conditioned.
pub fn receiver_matrix(h: ArrayView2<'_, Complex64>, receiver: Receiver) -> Result<CMat> {
    match receiver {
        Receiver::Mrc => Ok(h.to_owned()),
        Receiver::Zf => {
            let inv = hermitian_inverse(gram(h).view(), MAX_CONDITION)?;
            Ok(h.dot(&inv.inverse))
        }
    }
}
