use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::compressor::config::RangeMode;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SpectrumStats};

/// `log(16 R² n² m / ε)`.
fn max_norm_log(stats: &SpectrumStats) -> f64 {
    let r = stats.row_norm_bound;
    let n = stats.n as f64;
    (16.0 * r * r * n * n * stats.m as f64 / stats.eps).ln()
}

fn positive_margin(stats: &SpectrumStats) -> Result<f64> {
    let margin = stats.margin();
    if margin <= 0.0 {
        return Err(Error::AspectRatioTooSmall { margin });
    }
    Ok(margin)
}

/// High-probability bounds on `‖A S‖_max` and `‖Q(AS)⁺ A‖_max`:
/// `R_Q = R √(2 log(16R²n²m/ε) / m)` and `R_Q′ = 2κ / (√γ − 1 − t)`.
pub fn theory_ranges(stats: &SpectrumStats) -> Result<(f64, f64)> {
    let margin = positive_margin(stats)?;
    let r_q = stats.row_norm_bound * (2.0 * max_norm_log(stats).max(0.0) / stats.m as f64).sqrt();
    let r_q2 = 2.0 * stats.kappa / margin;
    Ok((r_q, r_q2))
}

/// Dynamic ranges for LPLR's two quantizers. Data-driven ranges are the max-abs of the
/// sketch `A S` and of the least-squares solution `W*`; theory ranges need `stats`.
pub fn select_dynamic_ranges(
    sketched: &Matrix,
    w_star: &Matrix,
    mode: RangeMode,
    stats: Option<&SpectrumStats>,
) -> Result<(f64, f64)> {
    match mode {
        RangeMode::DataDriven => Ok((sketched.max_abs(), w_star.max_abs())),
        RangeMode::Theory { .. } => {
            let stats = stats.ok_or_else(|| {
                Error::InvalidArgument("theory ranges need spectrum statistics".into())
            })?;
            theory_ranges(stats)
        }
    }
}

/// Sufficient bit budgets for an LPLR error of at most `(1 + k/(m−k−1))‖A_k − A‖² + ε`.
/// Advisory: they are worst-case and usually far above what is needed in practice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BitThresholds {
    /// `max(B₁, B₂)`, the requirement on the left factor.
    pub b_min: f64,
    pub b1: f64,
    pub b2: f64,
    /// Requirement on the right factor.
    pub b_prime: f64,
}

/// Evaluates the thresholds for the `(k, m, ε)` carried by `stats`. `c` is the absolute
/// constant of the subgaussian spectral bound, which has no published value.
pub fn bit_thresholds(stats: &SpectrumStats, c: f64) -> Result<BitThresholds> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("constant C must be positive, got {c}")));
    }
    let margin = positive_margin(stats)?;
    let (n, d, m) = (stats.n as f64, stats.d as f64, stats.m as f64);
    let r = stats.row_norm_bound;
    let eps = stats.eps;
    let root_gamma = stats.gamma.sqrt();
    let t = stats.t;
    let log_term = max_norm_log(stats).max(0.0);

    let excess = stats.gamma - 1.0 - 1.0 / m;
    if excess <= 0.0 {
        return Err(Error::AspectRatioTooSmall { margin: excess });
    }
    let b1 = (2.0 * r * stats.kappa_ak * (2.0 * n).sqrt() / (eps * excess).sqrt() * log_term.sqrt()
        + 1.0)
        .log2();

    let gap = stats.sigma_k - stats.sigma_k1 * (root_gamma + 1.0 + t) / margin;
    let mu = stats.sigma_r.max(gap);
    let b2 = (4.0 * c * r / (mu * LN_2) * ((root_gamma + 1.0 + t / 2f64.sqrt()) / margin)
        * (2.0 * log_term).sqrt()
        + 1.0)
        .log2();

    let b_prime = (4.0 * r * stats.kappa / margin * (n * d / eps).sqrt() + 1.0).log2();

    Ok(BitThresholds {
        b_min: b1.max(b2),
        b1,
        b2,
        b_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectrum_stats;
    use crate::test_util::random_matrix;

    #[test]
    fn theory_range_hand_evaluation() {
        // Rows of unit norm, n = d = 1000, m = 62, ε = 0.1.
        let a = Matrix::identity(1000);
        let stats = spectrum_stats(&a, 60, 62, 0.1).unwrap();
        let (r_q, r_q2) = theory_ranges(&stats).unwrap();
        let want = (2.0 * (16.0e6 * 62.0 / 0.1_f64).ln() / 62.0).sqrt();
        assert!((r_q - want).abs() < 1e-12);
        assert!((r_q2 - 2.0 * stats.kappa / stats.margin()).abs() < 1e-12);
    }

    #[test]
    fn data_driven_ranges_are_max_abs() {
        let s = Matrix::new(1, 3, vec![0.5, -2.0, 1.0]).unwrap();
        let w = Matrix::new(1, 2, vec![0.1, -0.3]).unwrap();
        assert_eq!(
            select_dynamic_ranges(&s, &w, RangeMode::DataDriven, None).unwrap(),
            (2.0, 0.3)
        );
        assert!(select_dynamic_ranges(&s, &w, RangeMode::Theory { eps: 0.1 }, None).is_err());
    }

    /// Independent evaluation straight from the singular values.
    fn oracle(sv: &[f64], n: usize, d: usize, m: usize, k: usize, eps: f64, big_r: f64) -> [f64; 4] {
        let (nf, df, mf) = (n as f64, d as f64, m as f64);
        let gamma = df / mf;
        let t = (2.0 * (32.0 * nf * big_r * big_r / eps).ln() / mf).sqrt();
        let lo = gamma.sqrt() - 1.0 - t;
        let hi = gamma.sqrt() + 1.0 + t;
        let r = sv.len();
        let (s1, sk, sr) = (sv[0], sv[k - 1], sv[r - 1]);
        let sk1 = if k < r { sv[k] } else { 0.0 };
        let denom = 1.0 - (sk1 / sk) * hi / lo;
        let kappa = if denom > 0.0 { (s1 / sr).min((s1 / sk) / denom) } else { s1 / sr };
        let l = (16.0 * big_r * big_r * nf * nf * mf / eps).ln();
        let b1 = (2.0 * big_r * (s1 / sk) * (2.0 * nf).sqrt() / (eps * (gamma - 1.0 - 1.0 / mf)).sqrt()
            * l.sqrt()
            + 1.0)
            .log2();
        let mu = sr.max(sk - sk1 * hi / lo);
        let b2 = (4.0 * big_r / (mu * 2f64.ln()) * ((gamma.sqrt() + 1.0 + t / 2f64.sqrt()) / lo)
            * (2.0 * l).sqrt()
            + 1.0)
            .log2();
        let bp = (4.0 * big_r * kappa / lo * (nf * df / eps).sqrt() + 1.0).log2();
        [b1.max(b2), b1, b2, bp]
    }

    #[test]
    fn thresholds_match_direct_evaluation() {
        let mut a = random_matrix(100, 100, 5);
        let scale = 1.0 / a.max_row_norm();
        a = a.scale(scale);
        let stats = spectrum_stats(&a, 5, 10, 0.1).unwrap();
        let got = bit_thresholds(&stats, 1.0).unwrap();
        let sv = crate::linalg::svd(&a, 1e-12).unwrap().singular_values;
        let want = oracle(&sv, 100, 100, 10, 5, 0.1, a.max_row_norm());
        for (g, w) in [got.b_min, got.b1, got.b2, got.b_prime].iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn thresholds_grow_as_eps_shrinks() {
        let a = random_matrix(100, 100, 6);
        let mut prev: Option<BitThresholds> = None;
        for eps in [1.0, 0.3, 0.1, 0.03, 0.01] {
            let th = bit_thresholds(&spectrum_stats(&a, 5, 10, eps).unwrap(), 1.0).unwrap();
            if let Some(p) = prev {
                assert!(th.b1 > p.b1 && th.b2 > p.b2 && th.b_prime > p.b_prime);
            }
            prev = Some(th);
        }
    }

    #[test]
    fn exactly_rank_k_uses_sigma_k() {
        let a = random_matrix(100, 3, 7).matmul(&random_matrix(3, 100, 8)).unwrap();
        let stats = spectrum_stats(&a, 3, 10, 0.1).unwrap();
        assert_eq!(stats.sigma_k1, 0.0);
        let th = bit_thresholds(&stats, 1.0).unwrap();
        let sv = crate::linalg::svd(&a, 1e-12).unwrap().singular_values;
        let want = oracle(&sv, 100, 100, 10, 3, 0.1, a.max_row_norm());
        assert!((th.b2 - want[2]).abs() < 1e-12);
    }
}
