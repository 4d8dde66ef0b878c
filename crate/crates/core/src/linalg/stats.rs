use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::svd::{svd, SvdResult, DEFAULT_RANK_TOLERANCE};
use crate::linalg::Matrix;

/// Spectral quantities entering the LPLR error bound and its dynamic ranges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumStats {
    /// `σ₁ / σ_r`.
    pub kappa_a: f64,
    /// `σ₁ / σ_k`.
    pub kappa_ak: f64,
    /// `min{κ(A), κ(A_k) / (1 − (σ_{k+1}/σ_k)(√γ+1+t)/(√γ−1−t))}`, or `κ(A)` when
    /// the second denominator is not positive.
    pub kappa: f64,
    /// `√(2 log(32 n R² / ε) / m)`.
    pub t: f64,
    /// `d / m`.
    pub gamma: f64,
    /// Largest row ℓ2 norm of `A`.
    pub row_norm_bound: f64,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub m: usize,
    pub eps: f64,
    pub sigma_1: f64,
    pub sigma_k: f64,
    /// Zero when `k` equals the numerical rank.
    pub sigma_k1: f64,
    pub sigma_r: f64,
}

impl SpectrumStats {
    /// `√γ − 1 − t`, the lower edge of the sketch's singular-value band.
    pub fn margin(&self) -> f64 {
        self.gamma.sqrt() - 1.0 - self.t
    }
}

/// Requires `1 ≤ k ≤ rank(A)`, `m ≥ 1`, `eps > 0` and `√(d/m) − 1 − t > 0`.
pub fn spectrum_stats(a: &Matrix, k: usize, m: usize, eps: f64) -> Result<SpectrumStats> {
    let dec = svd(a, DEFAULT_RANK_TOLERANCE)?;
    spectrum_stats_from(&dec, a.shape(), a.max_row_norm(), k, m, eps)
}

pub(crate) fn spectrum_stats_from(
    dec: &SvdResult,
    (n, d): (usize, usize),
    row_norm: f64,
    k: usize,
    m: usize,
    eps: f64,
) -> Result<SpectrumStats> {
    let r = dec.rank();
    if k == 0 || k > r {
        return Err(Error::InvalidArgument(format!(
            "rank {k} outside 1..={r} (numerical rank of the input)"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("sketch size must be at least 1".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let sv = &dec.singular_values;
    let (sigma_1, sigma_k, sigma_r) = (sv[0], sv[k - 1], sv[r - 1]);
    let sigma_k1 = sv.get(k).copied().unwrap_or(0.0);

    let gamma = d as f64 / m as f64;
    let log_arg = 32.0 * n as f64 * row_norm * row_norm / eps;
    let t = (2.0 * log_arg.ln().max(0.0) / m as f64).sqrt();
    let margin = gamma.sqrt() - 1.0 - t;
    if margin <= 0.0 {
        return Err(Error::AspectRatioTooSmall { margin });
    }

    let kappa_a = sigma_1 / sigma_r;
    let kappa_ak = sigma_1 / sigma_k;
    let denom = 1.0 - (sigma_k1 / sigma_k) * ((gamma.sqrt() + 1.0 + t) / margin);
    let kappa = if denom > 0.0 {
        kappa_a.min(kappa_ak / denom)
    } else {
        kappa_a
    };

    Ok(SpectrumStats {
        kappa_a,
        kappa_ak,
        kappa,
        t,
        gamma,
        row_norm_bound: row_norm,
        n,
        d,
        k,
        m,
        eps,
        sigma_1,
        sigma_k,
        sigma_k1,
        sigma_r,
    })
}
