//! Monte-Carlo checks of the probabilistic facts the error analysis relies on.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pinv, svd, DEFAULT_RANK_TOLERANCE};
use crate::quantize::{quantize_clipped, quantize_matrix, QuantizerSpec};
use crate::sketch::gaussian_matrix;
use crate::stream::{derive_seed, row_stream, tag};

/// Sample mean and its standard error.
fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn trial_seed(seed: u64, trial: usize) -> u64 {
    derive_seed(seed, tag::VERIFY, trial as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WishartCheck {
    pub m: usize,
    pub d: usize,
    pub trials: usize,
    pub mc_estimate: f64,
    /// `m² / (d − m − 1)`.
    pub theory: f64,
    pub rel_dev: f64,
    /// Draws discarded because `SᵀS` was singular.
    pub resampled: usize,
}

/// `E tr((SᵀS)⁻¹)` for `S ∈ R^{d×m}` with `N(0, 1/m)` entries. Requires `d ≥ m + 2`.
pub fn verify_wishart_trace(m: usize, d: usize, trials: usize, seed: u64) -> Result<WishartCheck> {
    if m == 0 || d < m + 2 || trials == 0 {
        return Err(Error::InvalidArgument(format!(
            "need m ≥ 1, d ≥ m + 2 and trials ≥ 1, got m={m} d={d} trials={trials}"
        )));
    }
    let theory = (m * m) as f64 / (d - m - 1) as f64;
    let mut total = 0.0;
    let mut resampled = 0;
    let mut draw = 0usize;
    let mut accepted = 0;
    while accepted < trials {
        let s = gaussian_matrix(d, m, 1.0 / m as f64, trial_seed(seed, draw));
        draw += 1;
        let dec = svd(&s, DEFAULT_RANK_TOLERANCE)?;
        if dec.rank() < m {
            resampled += 1;
            continue;
        }
        total += dec.singular_values.iter().map(|s| 1.0 / (s * s)).sum::<f64>();
        accepted += 1;
    }
    let mc_estimate = total / trials as f64;
    Ok(WishartCheck {
        m,
        d,
        trials,
        mc_estimate,
        theory,
        rel_dev: (mc_estimate - theory).abs() / theory,
        resampled,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqualizationCheck {
    pub d: usize,
    pub m: usize,
    pub bits: u32,
    pub range: f64,
    pub trials: usize,
    /// Mean of `‖Q(Sx) − Sx‖²`.
    pub mc_error: f64,
    pub std_error: f64,
    /// `R²/(2^B − 1)² + R²√2/√(πe)`.
    pub bound: f64,
    pub holds: bool,
}

/// Clipped dithered quantization of `u = S x` with `S ∈ R^{m×d}`, entries `N(0, 1/m)`,
/// clipping level `t = R/√m`. Each trial draws a fresh direction with `‖x‖ = input_scale · R`.
pub fn verify_equalization(
    d: usize,
    m: usize,
    bits: u32,
    range: f64,
    input_scale: f64,
    trials: usize,
    seed: u64,
) -> Result<EqualizationCheck> {
    if d == 0 || m == 0 || trials == 0 || !(range > 0.0) || !(0.0..=1.0).contains(&input_scale) {
        return Err(Error::InvalidArgument(format!(
            "bad equalization setup: d={d} m={m} R={range} scale={input_scale} trials={trials}"
        )));
    }
    let t = range / (m as f64).sqrt();
    let spec = QuantizerSpec::new(t, bits)?;
    let sd = (1.0 / m as f64).sqrt();
    let mut errors = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = row_stream(trial_seed(seed, trial), 0);
        let mut x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let target = input_scale * range;
        x.iter_mut().for_each(|v| *v *= if norm > 0.0 { target / norm } else { 0.0 });

        let mut err = 0.0;
        for _ in 0..m {
            let u: f64 = x
                .iter()
                .map(|xi| {
                    let s: f64 = StandardNormal.sample(&mut rng);
                    sd * s * xi
                })
                .sum();
            let q = spec.value(quantize_clipped(u, &spec, &mut rng));
            err += (q - u).powi(2);
        }
        errors.push(err);
    }
    let (mc_error, std_error) = mean_and_se(&errors);
    let levels = ((1u64 << bits) - 1) as f64;
    let bound = range * range / (levels * levels)
        + range * range * 2f64.sqrt() / (std::f64::consts::PI * std::f64::consts::E).sqrt();
    Ok(EqualizationCheck {
        d,
        m,
        bits,
        range,
        trials,
        mc_error,
        std_error,
        bound,
        holds: mc_error <= bound + 3.0 * std_error,
    })
}

/// Problem sizes for the sketched least-squares check: `Φ ∈ R^{ℓ×p}` of rank `rank`,
/// `Y ∈ R^{ℓ×q}`, sketch `G ∈ R^{m×ℓ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchedLsSetup {
    pub l: usize,
    pub p: usize,
    pub q: usize,
    pub m: usize,
    pub rank: usize,
    pub bits: u32,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SketchedLsSetup {
    fn default() -> Self {
        SketchedLsSetup {
            l: 60,
            p: 40,
            q: 30,
            m: 10,
            rank: 4,
            bits: 4,
            trials: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchedLsCheck {
    pub setup: SketchedLsSetup,
    /// `‖Φ X* − Y‖_F²`.
    pub optimum: f64,
    /// Mean of `‖Φ X̃ − Y‖_F²` with `X̃ = (GΦ)⁺ Q(GY)`.
    pub mc_mean: f64,
    pub std_error: f64,
    /// `(m−1)/(m−r−1)·‖ΦX* − Y‖² + q(Δ²/4)(σ_max²/σ_min²)·m²/(ℓ−m−1)`, averaged over trials
    /// since `Δ` follows the data-driven range of each draw.
    pub upper: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

pub fn verify_sketched_ls(setup: &SketchedLsSetup) -> Result<SketchedLsCheck> {
    let SketchedLsSetup {
        l,
        p,
        q,
        m,
        rank,
        bits,
        trials,
        seed,
    } = *setup;
    if rank == 0 || rank > p.min(l) || m < rank + 2 || l < m + 2 || q == 0 || trials == 0 {
        return Err(Error::InvalidArgument(format!(
            "bad sketched least-squares setup {setup:?}"
        )));
    }
    let base = derive_seed(seed, tag::VERIFY, u64::MAX);
    let phi = gaussian_matrix(l, rank, 1.0, base)
        .matmul(&gaussian_matrix(rank, p, 1.0, base ^ 1))?;
    let y = gaussian_matrix(l, q, 1.0, base ^ 2);

    let dec = svd(&phi, DEFAULT_RANK_TOLERANCE)?;
    let r = dec.rank();
    let cond_sq = (dec.singular_values[0] / dec.singular_values[r - 1]).powi(2);
    let x_star = pinv(&phi, DEFAULT_RANK_TOLERANCE)?.matmul(&y)?;
    let optimum = phi.matmul(&x_star)?.sub(&y)?.frobenius_norm_sq();
    let sketch_factor = (m - 1) as f64 / (m - r - 1) as f64;
    let noise_factor = q as f64 / 4.0 * cond_sq * (m * m) as f64 / (l - m - 1) as f64;

    let mut residuals = Vec::with_capacity(trials);
    let mut uppers = Vec::with_capacity(trials);
    for trial in 0..trials {
        let ts = trial_seed(seed, trial);
        let g = gaussian_matrix(m, l, 1.0 / m as f64, ts);
        let gy = g.matmul(&y)?;
        let spec = QuantizerSpec::new(gy.max_abs(), bits)?;
        let qgy = quantize_matrix(&gy, &spec, ts ^ 0x5a5a)?.dequantize();
        let x_tilde = pinv(&g.matmul(&phi)?, DEFAULT_RANK_TOLERANCE)?.matmul(&qgy)?;
        residuals.push(phi.matmul(&x_tilde)?.sub(&y)?.frobenius_norm_sq());
        let delta = spec.resolution();
        uppers.push(sketch_factor * optimum + noise_factor * delta * delta);
    }
    let (mc_mean, std_error) = mean_and_se(&residuals);
    let upper = uppers.iter().sum::<f64>() / trials as f64;
    Ok(SketchedLsCheck {
        setup: *setup,
        optimum,
        mc_mean,
        std_error,
        upper,
        lower_holds: optimum <= mc_mean + 3.0 * std_error,
        upper_holds: mc_mean <= upper + 3.0 * std_error,
    })
}

/// Empirical mean and variance of `trials` dithered draws of `x`.
pub fn dither_moments(x: f64, spec: &QuantizerSpec, trials: usize, seed: u64) -> Result<(f64, f64)> {
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least two draws".into()));
    }
    let mut rng = row_stream(derive_seed(seed, tag::VERIFY, 0), 0);
    let mut draws = Vec::with_capacity(trials);
    for _ in 0..trials {
        let code = crate::quantize::quantize_scalar(x, spec, &mut rng)?;
        draws.push(spec.value(code));
    }
    let n = trials as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wishart_small_cases() {
        let c = verify_wishart_trace(4, 20, 5000, 1).unwrap();
        assert!((c.theory - 16.0 / 15.0).abs() < 1e-15);
        assert!(c.rel_dev <= 0.05, "{c:?}");
        let c = verify_wishart_trace(1, 10, 5000, 2).unwrap();
        assert!((c.theory - 0.125).abs() < 1e-15);
        assert!(c.rel_dev <= 0.05, "{c:?}");
        assert_eq!(verify_wishart_trace(2, 5, 1, 0).unwrap().theory, 2.0);
        assert!(verify_wishart_trace(4, 5, 10, 0).is_err());
    }

    #[test]
    fn equalization_bound_holds() {
        let c = verify_equalization(256, 32, 4, 1.0, 1.0, 500, 3).unwrap();
        assert!((c.bound - (1.0 / 225.0 + 2f64.sqrt() / (std::f64::consts::PI * std::f64::consts::E).sqrt())).abs() < 1e-15);
        assert!(c.holds, "{c:?}");
    }

    #[test]
    fn equalization_high_precision_is_clipping_only() {
        // With 16 bits the quantization term is below 1e-8, leaving only the clipping loss,
        // whose expectation summed over coordinates is R²·[4(1 − Φ(1)) − 2φ(1)] for ‖x‖ = R.
        let c = verify_equalization(64, 8, 16, 1.0, 1.0, 4000, 4).unwrap();
        let tail = 1.0 - 0.841_344_746_068_542_9;
        let pdf = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let expected = 4.0 * tail - 2.0 * pdf;
        assert!((c.mc_error - expected).abs() <= 4.0 * c.std_error, "{c:?} vs {expected}");
    }

    #[test]
    fn equalization_zero_input() {
        let c = verify_equalization(32, 8, 3, 1.0, 0.0, 200, 5).unwrap();
        let t: f64 = 1.0 / 8f64.sqrt();
        let delta = 2.0 * t / 7.0;
        assert!(c.mc_error <= delta * delta * 8.0 / 4.0 + 1e-15);
        assert!(c.holds);
    }

    #[test]
    fn sketched_ls_sandwich_small() {
        let c = verify_sketched_ls(&SketchedLsSetup {
            trials: 60,
            ..SketchedLsSetup::default()
        })
        .unwrap();
        assert!(c.lower_holds && c.upper_holds, "{c:?}");
    }

    #[test]
    fn dither_moments_match_the_cell() {
        let spec = QuantizerSpec::new(1.0, 3).unwrap();
        let (mean, var) = dither_moments(0.3, &spec, 100_000, 6).unwrap();
        let delta = spec.resolution();
        assert!((mean - 0.3).abs() <= 4.0 * (delta / 2.0) / (100_000f64).sqrt());
        assert!(var <= 1.05 * delta * delta / 4.0);
    }
}
