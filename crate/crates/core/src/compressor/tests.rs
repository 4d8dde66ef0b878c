use super::*;
use crate::error::Error;
use crate::eval::relative_fro_error;
use crate::linalg::{svd, LstsqMethod, Matrix};
use crate::quantize::Rounding;
use crate::test_util::random_matrix;

fn low_rank(n: usize, d: usize, k: usize, seed: u64) -> Matrix {
    random_matrix(n, k, seed)
        .matmul(&random_matrix(k, d, seed.wrapping_add(1000)))
        .unwrap()
}

fn error_of(a: &Matrix, cfg: &CompressionConfig) -> f64 {
    let (f, report) = compress(a, cfg).unwrap();
    let err = relative_fro_error(&reconstruct(&f), a).unwrap();
    assert_eq!(report.relative_error, Some(err));
    err
}

#[test]
fn zero_input_is_exact() {
    let a = Matrix::zeros(12, 9);
    for cfg in [
        CompressionConfig::lplr(3, 4, 4),
        CompressionConfig::lplr(3, 4, 4).with_range_mode(RangeMode::Theory { eps: 0.1 }),
        CompressionConfig::lplr_svd(3, 4, 4).with_rotation(true),
        CompressionConfig::dsvd(3, 4, 4),
        CompressionConfig::naive(2),
    ] {
        let (f, report) = compress(&a, &cfg).unwrap();
        assert_eq!(reconstruct(&f), a, "{}", cfg.algorithm);
        assert!(report.exact_zero);
        assert_eq!(report.relative_error, None);
    }
}

#[test]
fn lplr_recovers_exactly_low_rank_input() {
    let a = low_rank(200, 200, 5, 1);
    let cfg = CompressionConfig::lplr(9, 16, 16).with_seed(2);
    let err = error_of(&a, &cfg);
    assert!(err <= 0.01, "err = {err}");
}

#[test]
fn lplr_shapes_and_bits() {
    let a = random_matrix(30, 20, 3);
    let (f, report) = lplr(&a, &CompressionConfig::lplr(4, 6, 5)).unwrap();
    assert_eq!(f.left().rows(), 30);
    assert_eq!(f.left().cols(), 4);
    assert_eq!(f.right().unwrap().cols(), 20);
    assert_eq!(f.payload_bits(), 6 * 30 * 4 + 5 * 4 * 20);
    assert_eq!(report.payload_bits, f.payload_bits());
    assert_eq!((report.n, report.d, report.m), (30, 20, 4));
    assert!(report.saturation_log.is_empty());
    assert_eq!(report.retries, 0);
}

#[test]
fn cg_solver_matches_closed_form() {
    let a = low_rank(40, 30, 3, 4);
    let closed = error_of(&a, &CompressionConfig::lplr(6, 12, 12).with_seed(5));
    let cg_cfg = CompressionConfig::lplr(6, 12, 12)
        .with_seed(5)
        .with_solver(LstsqMethod::conjugate_gradient());
    let (_, report) = lplr(&a, &cg_cfg).unwrap();
    assert!(report.solver.as_ref().unwrap().converged);
    assert!((report.relative_error.unwrap() - closed).abs() < 1e-3);
}

#[test]
fn lsvd_near_lossless_at_high_precision() {
    let a = Matrix::diagonal(10, 10, &[3.0, 2.0, 1.0]);
    let err = error_of(&a, &CompressionConfig::lplr_svd(3, 20, 20));
    assert!(err <= 1e-4, "err = {err}");
}

#[test]
fn lsvd_rotation_keeps_the_width() {
    let a = random_matrix(25, 18, 6);
    for rotate in [false, true] {
        let cfg = CompressionConfig::lplr_svd(5, 8, 8).with_rotation(rotate).with_seed(1);
        let (f, _) = lplr_svd(&a, &cfg).unwrap();
        assert_eq!(f.left().cols(), 5);
        assert_eq!(f.right().unwrap().rows(), 5);
        assert_eq!(f.shape(), (25, 18));
    }
    let unscaled = CompressionConfig {
        lsvd_basis: LsvdBasis::Unscaled,
        ..CompressionConfig::lplr_svd(5, 20, 20)
    };
    let scaled = error_of(&a, &CompressionConfig::lplr_svd(5, 20, 20));
    assert!((error_of(&a, &unscaled) - scaled).abs() < 1e-4);
}

#[test]
fn dsvd_high_precision_limits() {
    let a = low_rank(30, 25, 4, 7);
    assert!(error_of(&a, &CompressionConfig::dsvd(4, 30, 30)) <= 1e-6);

    let b = random_matrix(30, 25, 8);
    let sv = svd(&b, 1e-12).unwrap().singular_values;
    let floor = (sv[6..].iter().map(|s| s * s).sum::<f64>() / b.frobenius_norm_sq()).sqrt();
    let err = error_of(&b, &CompressionConfig::dsvd(6, 30, 30));
    assert!((err - floor).abs() <= 1e-3 * floor);
}

#[test]
fn dsvd_theory_ranges_never_saturate() {
    // Entries of U_k Σ_k are bounded by σ₁ and those of V_kᵀ by 1.
    let a = random_matrix(20, 15, 9);
    let cfg = CompressionConfig::dsvd(4, 6, 6).with_range_mode(RangeMode::Theory { eps: 0.1 });
    let (f, report) = dsvd(&a, &cfg).unwrap();
    assert_eq!(report.retries, 0);
    assert_eq!(f.right().unwrap().spec().dynamic_range(), 1.0);
}

#[test]
fn rank_above_min_dimension_is_rejected() {
    let a = random_matrix(5, 4, 10);
    assert!(dsvd(&a, &CompressionConfig::dsvd(5, 8, 8)).is_err());
    assert!(lplr_svd(&a, &CompressionConfig::lplr_svd(5, 8, 8)).is_err());
    assert!(lplr(&a, &CompressionConfig::dsvd(2, 8, 8)).is_err());
}

#[test]
fn naive_is_exact_on_grid_values() {
    let spec = crate::quantize::QuantizerSpec::new(1.5, 3).unwrap();
    let a = Matrix::from_fn(6, 5, |i, j| spec.value(((i * 5 + j) % 8) as u32));
    for range in [NaiveRange::MaxAbs, NaiveRange::MinMax] {
        let cfg = CompressionConfig {
            naive_range: range,
            ..CompressionConfig::naive(3)
        };
        let (f, _) = naive(&a, &cfg).unwrap();
        assert_eq!(reconstruct(&f), a);
    }
}

#[test]
fn naive_min_max_stores_the_center() {
    let a = Matrix::from_fn(8, 8, |i, j| (i + 2 * j) as f64 / 21.0);
    let (f, report) = naive_quant(&a, 8, 1).unwrap();
    let affine = f.affine().unwrap();
    assert_eq!(affine.alpha, 1.0);
    assert!((affine.beta - 0.5).abs() < 1e-15);
    assert_eq!(f.payload_bits(), 8 * 64 + 128);
    assert!(report.relative_error.unwrap() < 0.01);
}

#[test]
fn normalize_shift_never_hurts() {
    let a = random_matrix(30, 30, 11).map(|v| v + 2.0);
    for base in [
        CompressionConfig::lplr(5, 2, 2),
        CompressionConfig::dsvd(5, 2, 2),
        CompressionConfig::naive(1),
    ] {
        let plain = error_of(&a, &base.clone().with_seed(3));
        let shifted = error_of(&a, &base.with_seed(3).with_normalize_shift(true));
        assert!(shifted <= plain + 1e-12);
    }
}

#[test]
fn theory_mode_guards_the_aspect_ratio() {
    let a = random_matrix(20, 20, 12);
    let cfg = CompressionConfig::lplr(10, 8, 8).with_range_mode(RangeMode::Theory { eps: 0.1 });
    assert!(matches!(lplr(&a, &cfg), Err(Error::AspectRatioTooSmall { .. })));
}

#[test]
fn theory_mode_lplr_runs() {
    let a = random_matrix(60, 400, 13).scale(0.1);
    let cfg = CompressionConfig::lplr(4, 12, 12).with_range_mode(RangeMode::Theory { eps: 1.0 });
    let (f, report) = lplr(&a, &cfg).unwrap();
    assert_eq!(f.left().cols(), 4);
    assert!(report.relative_error.unwrap().is_finite());
}

#[test]
fn saturation_exhausts_retries() {
    // Rank-1 input with row norms up to 40; ε is chosen so the left range is 40·√(0.01),
    // far below the typical magnitude of A S.
    let a = Matrix::from_fn(4, 200, |i, j| if j == 0 { 10.0 * (i + 1) as f64 } else { 0.0 });
    let eps = 16.0 * 1600.0 * 16.0 * 2.0 / 0.01f64.exp();
    let cfg = CompressionConfig {
        max_retries: 2,
        theory_rank: Some(1),
        ..CompressionConfig::lplr(2, 1, 1).with_range_mode(RangeMode::Theory { eps })
    };
    match lplr(&a, &cfg) {
        Err(Error::SaturationExhausted { attempts }) => assert_eq!(attempts, 3),
        other => panic!("expected exhaustion, got {:?}", other.map(|r| r.1)),
    }
}

#[test]
fn compression_is_deterministic() {
    let a = random_matrix(40, 35, 14);
    for cfg in [
        CompressionConfig::lplr(6, 5, 5),
        CompressionConfig::lplr_svd(6, 5, 5).with_rotation(true),
        CompressionConfig::dsvd(6, 5, 5),
        CompressionConfig::naive(3),
    ] {
        let cfg = cfg.with_seed(77);
        assert_eq!(compress(&a, &cfg).unwrap().0, compress(&a, &cfg).unwrap().0);
        let other = cfg.clone().with_seed(78);
        if cfg.algorithm != Algorithm::Dsvd || cfg.rounding == Rounding::Dithered {
            assert_ne!(
                compress(&a, &cfg).unwrap().0.left(),
                compress(&a, &other).unwrap().0.left()
            );
        }
    }
}

#[test]
fn nearest_rounding_dsvd_ignores_the_seed() {
    let a = random_matrix(20, 20, 15);
    let cfg = CompressionConfig::dsvd(4, 4, 4).with_rounding(Rounding::Nearest);
    let e1 = error_of(&a, &cfg.clone().with_seed(1));
    let e2 = error_of(&a, &cfg.with_seed(2));
    assert_eq!(e1, e2);
}
