//! Gaussian sketching matrices and the rangefinder product `A · S`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{svd, Matrix, DEFAULT_RANK_TOLERANCE};
use crate::stream::row_stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchConfig {
    /// `d`, the number of columns of the matrix being sketched.
    pub input_cols: usize,
    /// `m`, the number of sketch columns.
    pub sketch_size: usize,
    pub seed: u64,
}

impl SketchConfig {
    pub fn new(input_cols: usize, sketch_size: usize, seed: u64) -> Result<Self> {
        if input_cols == 0 || sketch_size == 0 {
            return Err(Error::InvalidArgument(format!(
                "sketch needs d ≥ 1 and m ≥ 1, got d = {input_cols}, m = {sketch_size}"
            )));
        }
        Ok(SketchConfig {
            input_cols,
            sketch_size,
            seed,
        })
    }

    /// `m > d/4`: allowed, but outside the regime the error analysis assumes.
    pub fn is_wide(&self) -> bool {
        4 * self.sketch_size > self.input_cols
    }
}

/// `rows × cols` matrix of i.i.d. `N(0, variance)` entries. Row `i` is drawn from its own
/// stream, so the output is identical for any thread count.
pub fn gaussian_matrix(rows: usize, cols: usize, variance: f64, seed: u64) -> Matrix {
    let scale = variance.sqrt();
    let mut data = vec![0.0; rows * cols];
    if cols > 0 {
        data.par_chunks_mut(cols).enumerate().for_each(|(i, row)| {
            let mut rng = row_stream(seed, i);
            for v in row {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = scale * z;
            }
        });
    }
    Matrix::from_parts(rows, cols, data)
}

/// `S ∈ R^{d×m}` with entries `N(0, 1/m)`.
pub fn gaussian_sketch(cfg: &SketchConfig) -> Matrix {
    gaussian_matrix(
        cfg.input_cols,
        cfg.sketch_size,
        1.0 / cfg.sketch_size as f64,
        cfg.seed,
    )
}

/// `A · S` for a fresh `d × m` sketch `S`.
pub fn rangefinder(a: &Matrix, m: usize, seed: u64) -> Result<Matrix> {
    let cfg = SketchConfig::new(a.cols(), m, seed)?;
    a.matmul(&gaussian_sketch(&cfg))
}

/// Extreme singular values of a sketch next to the band `√(d/m) ∓ (1 + t)` that holds with
/// probability at least `1 − 2e^{−m t²/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularBand {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub lower: f64,
    pub upper: f64,
}

impl SingularBand {
    pub fn contains(&self) -> bool {
        self.lower <= self.sigma_min && self.sigma_max <= self.upper
    }
}

/// `s` is expected to have `N(0, 1/m)` entries, the scaling under which the band is stated.
pub fn singular_band(s: &Matrix, t: f64) -> Result<SingularBand> {
    let (d, m) = s.shape();
    if d < m {
        return Err(Error::InvalidArgument(format!(
            "singular band needs d ≥ m, got a {d}x{m} sketch"
        )));
    }
    let dec = svd(s, DEFAULT_RANK_TOLERANCE)?;
    let sigma_max = dec.spectrum().next().unwrap_or(0.0);
    let sigma_min = dec.spectrum().last().unwrap_or(0.0);
    let root = (d as f64 / m as f64).sqrt();
    Ok(SingularBand {
        sigma_min,
        sigma_max,
        lower: root - 1.0 - t,
        upper: root + 1.0 + t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::random_matrix;

    #[test]
    fn sketch_moments() {
        let m = 50;
        let s = gaussian_sketch(&SketchConfig::new(500, m, 3).unwrap());
        assert_eq!(s.shape(), (500, m));
        let n = s.as_slice().len() as f64;
        let mean = s.sum() / n;
        let sigma = (1.0 / m as f64).sqrt();
        assert!(mean.abs() <= 4.0 * sigma / n.sqrt());
        let var = s.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var * m as f64 - 1.0).abs() < 0.1, "var = {var}");
    }

    #[test]
    fn sketch_is_reproducible() {
        let cfg = SketchConfig::new(30, 7, 99).unwrap();
        assert_eq!(gaussian_sketch(&cfg), gaussian_sketch(&cfg));
        let other = SketchConfig { seed: 100, ..cfg };
        assert_ne!(gaussian_sketch(&cfg), gaussian_sketch(&other));
    }

    #[test]
    fn prefix_rows_do_not_depend_on_shape() {
        let a = gaussian_matrix(10, 4, 1.0, 5);
        let b = gaussian_matrix(3, 4, 1.0, 5);
        assert_eq!(a.leading_rows(3), b);
    }

    #[test]
    fn rangefinder_trivial_inputs() {
        assert_eq!(rangefinder(&Matrix::zeros(4, 6), 3, 1).unwrap(), Matrix::zeros(4, 3));
        let s = gaussian_sketch(&SketchConfig::new(5, 5, 2).unwrap());
        let as_ = rangefinder(&Matrix::identity(5), 5, 2).unwrap();
        assert!(as_.sub(&s).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn rank_one_range_is_collinear() {
        let u = random_matrix(12, 1, 1);
        let v = random_matrix(1, 9, 2);
        let y = rangefinder(&u.matmul(&v).unwrap(), 4, 3).unwrap();
        let uu = u.frobenius_norm_sq();
        for j in 0..4 {
            let col = y.column(j);
            let coef: f64 = col.iter().zip(u.as_slice()).map(|(a, b)| a * b).sum::<f64>() / uu;
            let resid: f64 = col
                .iter()
                .zip(u.as_slice())
                .map(|(a, b)| (a - coef * b).powi(2))
                .sum::<f64>()
                .sqrt();
            let norm: f64 = col.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(resid <= 1e-10 * norm.max(1.0));
        }
    }

    #[test]
    fn band_on_orthogonal_input() {
        let s = Matrix::identity(6);
        let band = singular_band(&s, 0.0).unwrap();
        assert!((band.sigma_min - band.sigma_max).abs() < 1e-12);
        assert!((band.sigma_max - 1.0).abs() < 1e-12);
        assert_eq!(band.lower, 0.0);
        assert_eq!(band.upper, 2.0);
        assert!(band.contains());
    }

    #[test]
    fn band_violations_are_rare() {
        let (d, m, t) = (400, 10, 0.5);
        let trials = 200;
        let mut violations = 0;
        for seed in 0..trials {
            let s = gaussian_sketch(&SketchConfig::new(d, m, seed).unwrap());
            let band = singular_band(&s, t).unwrap();
            assert!(band.sigma_min <= band.sigma_max);
            violations += (!band.contains()) as u32;
        }
        let p = (2.0 * (-(m as f64) * t * t / 2.0).exp()).min(1.0);
        let mean = p * trials as f64;
        let allowed = mean + 2.33 * (mean * (1.0 - p)).sqrt() + 1.0;
        assert!((violations as f64) <= allowed, "{violations} > {allowed}");
    }

    #[test]
    fn rejects_tall_band_input() {
        assert!(singular_band(&Matrix::zeros(2, 3), 0.1).is_err());
        assert!(SketchConfig::new(0, 1, 0).is_err());
        assert!(SketchConfig::new(100, 26, 0).unwrap().is_wide());
        assert!(!SketchConfig::new(100, 25, 0).unwrap().is_wide());
    }
}
