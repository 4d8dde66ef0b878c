//! Thin SVD and the decompositions built on it.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Singular values below `DEFAULT_RANK_TOLERANCE · σ₁` are treated as zero.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-12;

/// Rank-revealing thin SVD `A = U · diag(σ) · Vᵀ`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// Left singular vectors, `n × r`.
    pub u: Matrix,
    /// Nonincreasing, strictly positive.
    pub singular_values: Vec<f64>,
    /// Right singular vectors, `d × r`.
    pub v: Matrix,
    /// Singular values that fell below the rank tolerance, nonincreasing.
    pub discarded: Vec<f64>,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// All `min(n, d)` singular values, retained ones first.
    pub fn spectrum(&self) -> impl Iterator<Item = f64> + '_ {
        self.singular_values.iter().chain(&self.discarded).copied()
    }

    /// `U_k Σ_k`, the left factor scaled by the singular values.
    pub fn scaled_left(&self, k: usize) -> Matrix {
        self.u.leading_columns(k).scale_columns(&self.singular_values[..k])
    }

    /// `V_kᵀ`, `k × d`.
    pub fn right_t(&self, k: usize) -> Matrix {
        self.v.leading_columns(k).transpose()
    }

    pub fn reconstruct(&self) -> Matrix {
        let r = self.rank();
        if r == 0 {
            return Matrix::zeros(self.u.rows(), self.v.rows());
        }
        self.scaled_left(r)
            .matmul(&self.right_t(r))
            .expect("SVD factors have compatible shapes")
    }
}

/// Thin SVD with numerical rank truncation at `rank_tolerance · σ₁`.
pub fn svd(a: &Matrix, rank_tolerance: f64) -> Result<SvdResult> {
    if !(rank_tolerance > 0.0 && rank_tolerance < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rank tolerance must lie in (0, 1), got {rank_tolerance}"
        )));
    }
    let (n, d) = a.shape();
    let thin = a.view().thin_svd();
    let s = thin.s_diagonal();
    let r_full = n.min(d);

    let mut order: Vec<usize> = (0..r_full).collect();
    let sv: Vec<f64> = (0..r_full).map(|i| s.read(i)).collect();
    if sv.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdNotConverged { rows: n, cols: d });
    }
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));

    let sigma1 = sv.get(order[0]).copied().unwrap_or(0.0);
    let cutoff = rank_tolerance * sigma1;
    let rank = order.iter().take_while(|&&i| sv[i] > cutoff && sv[i] > 0.0).count();

    let u_all = thin.u();
    let v_all = thin.v();
    let u = Matrix::from_fn(n, rank, |i, j| u_all.read(i, order[j]));
    let v = Matrix::from_fn(d, rank, |i, j| v_all.read(i, order[j]));
    if u.as_slice().iter().chain(v.as_slice()).any(|x| !x.is_finite()) {
        return Err(Error::SvdNotConverged { rows: n, cols: d });
    }
    Ok(SvdResult {
        u,
        singular_values: order[..rank].iter().map(|&i| sv[i]).collect(),
        v,
        discarded: order[rank..].iter().map(|&i| sv[i].max(0.0)).collect(),
    })
}

/// Best rank-`k` approximation and its squared Frobenius residual.
pub fn best_rank_k(a: &Matrix, k: usize) -> Result<(Matrix, f64)> {
    let limit = a.rows().min(a.cols());
    if k == 0 || k > limit {
        return Err(Error::InvalidArgument(format!(
            "rank {k} outside 1..={limit} for a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let dec = svd(a, DEFAULT_RANK_TOLERANCE)?;
    Ok(truncate(&dec, k))
}

/// Rank-`k` truncation of an existing decomposition.
pub fn truncate(dec: &SvdResult, k: usize) -> (Matrix, f64) {
    let kept = k.min(dec.rank());
    let tail: f64 = dec.spectrum().skip(k).map(|s| s * s).sum();
    let approx = if kept == 0 {
        Matrix::zeros(dec.u.rows(), dec.v.rows())
    } else {
        dec.scaled_left(kept)
            .matmul(&dec.right_t(kept))
            .expect("SVD factors have compatible shapes")
    };
    (approx, tail)
}

/// Moore-Penrose pseudo-inverse, inverting only the retained singular values.
pub fn pinv(a: &Matrix, rank_tolerance: f64) -> Result<Matrix> {
    let dec = svd(a, rank_tolerance)?;
    Ok(pinv_from(&dec))
}

pub(crate) fn pinv_from(dec: &SvdResult) -> Matrix {
    let r = dec.rank();
    if r == 0 {
        return Matrix::zeros(dec.v.rows(), dec.u.rows());
    }
    let inv: Vec<f64> = dec.singular_values.iter().map(|s| 1.0 / s).collect();
    dec.v
        .scale_columns(&inv)
        .matmul(&dec.u.transpose())
        .expect("SVD factors have compatible shapes")
}
