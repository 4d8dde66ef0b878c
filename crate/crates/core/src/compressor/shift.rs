use crate::compressor::factorization::Affine;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// `argmin_{α,β} ‖α Y + β J − X‖_F` with `J` the all-ones matrix.
///
/// A constant `Y` leaves `α` undetermined; the fallback is `α = 0`, `β = mean(X)`.
pub fn normalize_shift(y: &Matrix, x: &Matrix) -> Result<Affine> {
    if y.shape() != x.shape() {
        return Err(Error::DimensionMismatch(format!(
            "normalize_shift got {:?} and {:?}",
            y.shape(),
            x.shape()
        )));
    }
    let count = y.as_slice().len() as f64;
    let mean_y = y.sum() / count;
    let mean_x = x.sum() / count;
    // Centered sums equal ⟨X,Y⟩ − ΣX·ΣY/N and ‖Y‖² − (ΣY)²/N without the cancellation.
    let (mut cov, mut var) = (0.0, 0.0);
    for (&yv, &xv) in y.as_slice().iter().zip(x.as_slice()) {
        let dy = yv - mean_y;
        cov += dy * (xv - mean_x);
        var += dy * dy;
    }
    if var <= 1e-14 * y.frobenius_norm_sq() || var == 0.0 {
        return Ok(Affine {
            alpha: 0.0,
            beta: mean_x,
        });
    }
    let alpha = cov / var;
    Ok(Affine {
        alpha,
        beta: mean_x - alpha * mean_y,
    })
}
