use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{svd, Matrix, DEFAULT_RANK_TOLERANCE};

/// A low-rank configuration whose stored bits match naive quantization of the same matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityBudget {
    pub n: usize,
    pub d: usize,
    pub bits: u32,
    pub bits2: u32,
    pub bnq: u32,
    /// Largest width with `B·n·m + B′·m·d ≤ B_nq·n·d`.
    pub m: usize,
}

impl ParityBudget {
    pub fn low_rank_bits(&self) -> u128 {
        self.m as u128 * self.per_column_bits()
    }

    pub fn naive_bits(&self) -> u128 {
        self.bnq as u128 * self.n as u128 * self.d as u128
    }

    fn per_column_bits(&self) -> u128 {
        self.bits as u128 * self.n as u128 + self.bits2 as u128 * self.d as u128
    }
}

/// `m = ⌊B_nq·n·d / (B·n + B′·d)⌋`.
pub fn parity_sketch_size(n: usize, d: usize, bits: u32, bits2: u32, bnq: u32) -> Result<ParityBudget> {
    if n == 0 || d == 0 || bits == 0 || bits2 == 0 || bnq == 0 {
        return Err(Error::InvalidArgument(format!(
            "parity needs positive arguments, got n={n} d={d} B={bits} B'={bits2} B_nq={bnq}"
        )));
    }
    let total = bnq as u128 * n as u128 * d as u128;
    let per_column = bits as u128 * n as u128 + bits2 as u128 * d as u128;
    let m = total / per_column;
    if m == 0 {
        return Err(Error::BudgetTooSmall {
            n,
            d,
            bits,
            bits2,
            bnq,
        });
    }
    Ok(ParityBudget {
        n,
        d,
        bits,
        bits2,
        bnq,
        m: m as usize,
    })
}

/// `‖Â − A‖_F / ‖A‖_F`.
pub fn relative_fro_error(approx: &Matrix, reference: &Matrix) -> Result<f64> {
    let norm = reference.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(approx.sub(reference)?.frobenius_norm() / norm)
}

/// Upper bound `(1 + k/(m−k−1))·‖A_k − A‖_F² + ε` on the expected squared LPLR error at
/// sufficient bit budgets. Requires `m ≥ k + 2`.
pub fn thm1_bound(a: &Matrix, k: usize, m: usize, eps: f64) -> Result<f64> {
    let limit = a.rows().min(a.cols());
    if k == 0 || k > limit {
        return Err(Error::InvalidArgument(format!("rank {k} outside 1..={limit}")));
    }
    if m < k + 2 {
        return Err(Error::InvalidArgument(format!(
            "the bound needs m ≥ k + 2, got m = {m}, k = {k}"
        )));
    }
    let dec = svd(a, DEFAULT_RANK_TOLERANCE)?;
    let tail: f64 = dec.spectrum().skip(k).map(|s| s * s).sum();
    Ok((1.0 + k as f64 / (m - k - 1) as f64) * tail + eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::random_matrix;
    use proptest::prelude::*;

    #[test]
    fn table_widths() {
        let m = |b, bnq| parity_sketch_size(1000, 1000, b, b, bnq).unwrap().m;
        assert_eq!(m(8, 1), 62);
        assert_eq!(m(16, 2), 62);
        assert_eq!(m(32, 1), 15);
    }

    #[test]
    fn budget_too_small() {
        assert!(matches!(
            parity_sketch_size(2, 2, 8, 8, 1),
            Err(Error::BudgetTooSmall { .. })
        ));
        assert!(parity_sketch_size(0, 2, 8, 8, 1).is_err());
    }

    #[test]
    fn relative_error_cases() {
        let a = random_matrix(4, 3, 1);
        assert_eq!(relative_fro_error(&a, &a).unwrap(), 0.0);
        assert_eq!(relative_fro_error(&Matrix::zeros(4, 3), &a).unwrap(), 1.0);
        assert!((relative_fro_error(&a.scale(2.0), &a).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            relative_fro_error(&a, &Matrix::zeros(4, 3)),
            Err(Error::ZeroReference)
        ));
    }

    #[test]
    fn thm1_cases() {
        let a = Matrix::diagonal(10, 10, &[3.0, 2.0, 1.0]);
        assert!((thm1_bound(&a, 2, 5, 0.01).unwrap() - 2.01).abs() < 1e-12);
        assert!((thm1_bound(&a, 3, 5, 0.01).unwrap() - 0.01).abs() < 1e-12);
        assert!(thm1_bound(&a, 2, 3, 0.01).is_err());

        let b = random_matrix(15, 12, 2);
        let bounds: Vec<f64> = (4..12).map(|m| thm1_bound(&b, 2, m, 0.0).unwrap()).collect();
        assert!(bounds.windows(2).all(|w| w[1] < w[0]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn parity_is_tight(
            n in 1usize..5000,
            d in 1usize..5000,
            bits in 1u32..33,
            bits2 in 1u32..33,
            bnq in 1u32..33,
        ) {
            match parity_sketch_size(n, d, bits, bits2, bnq) {
                Ok(p) => {
                    prop_assert!(p.low_rank_bits() <= p.naive_bits());
                    prop_assert!(p.naive_bits() < p.low_rank_bits() + p.per_column_bits());
                }
                Err(Error::BudgetTooSmall { .. }) => {
                    prop_assert!((bnq as u128) * (n as u128) * (d as u128)
                        < bits as u128 * n as u128 + bits2 as u128 * d as u128);
                }
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }
}
