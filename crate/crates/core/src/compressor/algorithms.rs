use std::time::Instant;

use crate::compressor::config::{Algorithm, CompressionConfig, LsvdBasis, NaiveRange, RangeMode};
use crate::compressor::factorization::{reconstruct, Affine, Factorization, Provenance};
use crate::compressor::ranges::theory_ranges;
use crate::compressor::report::{CompressionReport, SaturationEvent, SolverInfo, StageTimings};
use crate::compressor::shift::normalize_shift;
use crate::error::{Error, Result};
use crate::eval::relative_fro_error;
use crate::linalg::{lstsq, spectrum_stats_from, svd, LstsqMethod, LstsqSolution, Matrix, SvdResult, DEFAULT_RANK_TOLERANCE};
use crate::quantize::{quantize_matrix_with, QuantizedMatrix, QuantizerSpec};
use crate::sketch::{gaussian_matrix, gaussian_sketch, SketchConfig};
use crate::stream::{derive_seed, tag};

/// Runs the algorithm selected by `cfg.algorithm`.
pub fn compress(a: &Matrix, cfg: &CompressionConfig) -> Result<(Factorization, CompressionReport)> {
    match cfg.algorithm {
        Algorithm::Lplr => lplr(a, cfg),
        Algorithm::LplrSvd => lplr_svd(a, cfg),
        Algorithm::Dsvd => dsvd(a, cfg),
        Algorithm::Naive => naive(a, cfg),
    }
}

/// Bookkeeping shared by all algorithms for one compression call.
struct Run<'a> {
    a: &'a Matrix,
    cfg: &'a CompressionConfig,
    start: Instant,
    timings: StageTimings,
    saturation_log: Vec<SaturationEvent>,
    warnings: Vec<String>,
    exact_zero: bool,
    solver: Option<SolverInfo>,
}

enum Attempt<T> {
    Done(T),
    Saturated,
}

impl<'a> Run<'a> {
    fn new(a: &'a Matrix, cfg: &'a CompressionConfig, expected: Algorithm) -> Result<Self> {
        if cfg.algorithm != expected {
            return Err(Error::InvalidArgument(format!(
                "config is for {} but {} was called",
                cfg.algorithm, expected
            )));
        }
        cfg.validate()?;
        Ok(Run {
            a,
            cfg,
            start: Instant::now(),
            timings: StageTimings::default(),
            saturation_log: Vec::new(),
            warnings: Vec::new(),
            exact_zero: false,
            solver: None,
        })
    }

    fn attempts(&self) -> u32 {
        self.cfg.max_retries.saturating_add(1)
    }

    fn timed_svd(&mut self) -> Result<SvdResult> {
        let t = Instant::now();
        let dec = svd(self.a, DEFAULT_RANK_TOLERANCE)?;
        self.timings.svd += t.elapsed().as_secs_f64();
        Ok(dec)
    }

    /// Quantizes `x` on `[−range, range]`. An all-zero input gets the exact zero grid;
    /// a saturated one is logged and reported as `Attempt::Saturated`.
    fn quantize(
        &mut self,
        x: &Matrix,
        range: f64,
        bits: u32,
        dither: u64,
        attempt: u32,
        factor: &str,
    ) -> Result<Attempt<QuantizedMatrix>> {
        let t = Instant::now();
        let result = if x.max_abs() == 0.0 {
            self.exact_zero = true;
            quantize_matrix_with(x, &QuantizerSpec::degenerate(bits)?, self.cfg.rounding, dither)
        } else {
            let spec = QuantizerSpec::new(range, bits)?;
            quantize_matrix_with(x, &spec, self.cfg.rounding, dither)
        };
        self.timings.quantize += t.elapsed().as_secs_f64();
        match result {
            Ok(q) => Ok(Attempt::Done(q)),
            Err(Error::Saturated {
                row,
                col,
                value,
                range,
            }) => {
                self.saturation_log.push(SaturationEvent {
                    attempt,
                    factor: factor.to_string(),
                    row,
                    col,
                    value,
                    range,
                });
                Ok(Attempt::Saturated)
            }
            Err(e) => Err(e),
        }
    }

    fn solve(&mut self, basis: &Matrix) -> Result<LstsqSolution> {
        let t = Instant::now();
        let sol = lstsq(basis, self.a, self.cfg.solver)?;
        self.timings.solve += t.elapsed().as_secs_f64();
        if !sol.converged {
            self.warnings.push(format!(
                "conjugate gradient stopped after {} iterations at relative residual {:.3e}",
                sol.iterations, sol.residual
            ));
        }
        self.solver = Some(SolverInfo {
            method: match self.cfg.solver {
                LstsqMethod::ClosedForm => "closed_form".into(),
                LstsqMethod::ConjugateGradient { .. } => "conjugate_gradient".into(),
            },
            converged: sol.converged,
            iterations: sol.iterations,
            residual: sol.residual,
        });
        Ok(sol)
    }

    fn finish(
        mut self,
        left: QuantizedMatrix,
        right: Option<QuantizedMatrix>,
        affine: Option<Affine>,
        retries: u32,
    ) -> Result<(Factorization, CompressionReport)> {
        let cfg = self.cfg;
        let range_left = left.spec().dynamic_range();
        let range_right = right.as_ref().map(|r| r.spec().dynamic_range());
        let mut f = Factorization::new(cfg.algorithm, left, right, affine)?.with_provenance(Provenance {
            seed: cfg.seed,
            retries,
            config: cfg.clone(),
        });
        if cfg.normalize_shift {
            f.set_affine(Some(normalize_shift(&f.product(), self.a)?));
        }
        let relative_error = match relative_fro_error(&reconstruct(&f), self.a) {
            Ok(e) => Some(e),
            Err(Error::ZeroReference) => None,
            Err(e) => return Err(e),
        };
        self.timings.total = self.start.elapsed().as_secs_f64();
        let (n, d) = self.a.shape();
        let naive = cfg.algorithm == Algorithm::Naive;
        let report = CompressionReport {
            algorithm: cfg.algorithm,
            n,
            d,
            m: if naive { 0 } else { f.width() },
            bits: cfg.bits,
            bits2: if naive { 0 } else { cfg.bits2 },
            range_left,
            range_right,
            payload_bits: f.payload_bits(),
            uncompressed_bits: 64 * (n * d) as u64,
            relative_error,
            seed: cfg.seed,
            retries,
            saturation_log: self.saturation_log,
            exact_zero: self.exact_zero,
            affine: f.affine(),
            solver: self.solver,
            timings: self.timings,
            warnings: self.warnings,
        };
        Ok((f, report))
    }
}

fn check_rank(a: &Matrix, k: usize) -> Result<()> {
    let limit = a.rows().min(a.cols());
    if k > limit {
        return Err(Error::InvalidArgument(format!(
            "rank {k} exceeds min(n, d) = {limit}"
        )));
    }
    Ok(())
}

/// `U_k Σ_k` (or `U_k`) and `V_kᵀ`, zero-padded to width `k` when the numerical rank is lower.
fn svd_factors(dec: &SvdResult, k: usize, basis: LsvdBasis, n: usize, d: usize) -> (Matrix, Matrix) {
    let kept = k.min(dec.rank());
    let left = match basis {
        LsvdBasis::Scaled => dec.scaled_left(kept),
        LsvdBasis::Unscaled => dec.u.leading_columns(kept),
    };
    let right = dec.right_t(kept);
    (left.padded(n, k), right.padded(k, d))
}

fn theory_eps(cfg: &CompressionConfig) -> Option<f64> {
    match cfg.range_mode {
        RangeMode::Theory { eps } => Some(eps),
        RangeMode::DataDriven => None,
    }
}

/// Sketch `Y = A S`, quantize `L = Q(Y)`, solve `W* = argmin ‖L W − A‖_F`, quantize `R = Q′(W*)`.
///
/// A saturated attempt draws a fresh sketch and fresh dither.
pub fn lplr(a: &Matrix, cfg: &CompressionConfig) -> Result<(Factorization, CompressionReport)> {
    let mut run = Run::new(a, cfg, Algorithm::Lplr)?;
    let (n, d) = a.shape();
    let m = cfg.rank;
    let sketch_cfg = SketchConfig::new(d, m, cfg.seed)?;
    if sketch_cfg.is_wide() {
        run.warnings.push(format!(
            "sketch size {m} exceeds d/4 = {}; error guarantees assume m ≪ d",
            d as f64 / 4.0
        ));
    }

    let theory = match theory_eps(cfg) {
        Some(eps) if a.max_abs() > 0.0 => {
            let dec = run.timed_svd()?;
            let k = cfg.theory_rank.unwrap_or(m.saturating_sub(2).max(1));
            let k_eff = k.min(dec.rank());
            if k_eff < k {
                run.warnings.push(format!(
                    "theory rank {k} clamped to the numerical rank {k_eff}"
                ));
            }
            let stats = spectrum_stats_from(&dec, (n, d), a.max_row_norm(), k_eff, m, eps)?;
            Some(theory_ranges(&stats)?)
        }
        _ => None,
    };

    for attempt in 0..run.attempts() {
        let t = Instant::now();
        let s = gaussian_sketch(&SketchConfig {
            seed: derive_seed(cfg.seed, tag::SKETCH, attempt as u64),
            ..sketch_cfg
        });
        let y = a.matmul(&s)?;
        run.timings.sketch += t.elapsed().as_secs_f64();

        let r_q = theory.map_or_else(|| y.max_abs(), |r| r.0);
        let dither = derive_seed(cfg.seed, tag::LEFT_DITHER, attempt as u64);
        let left = match run.quantize(&y, r_q, cfg.bits, dither, attempt, "left")? {
            Attempt::Done(q) => q,
            Attempt::Saturated => continue,
        };

        let w = run.solve(&left.dequantize())?.x;
        let r_q2 = theory.map_or_else(|| w.max_abs(), |r| r.1);
        let dither = derive_seed(cfg.seed, tag::RIGHT_DITHER, attempt as u64);
        let right = match run.quantize(&w, r_q2, cfg.bits2, dither, attempt, "right")? {
            Attempt::Done(q) => q,
            Attempt::Saturated => continue,
        };
        return run.finish(left, Some(right), None, attempt);
    }
    Err(Error::SaturationExhausted {
        attempts: run.attempts(),
    })
}

/// Quantize the truncated-SVD basis `U_k Σ_k` (optionally rotated by a `k × k` Gaussian with
/// entry variance `1/k`), then solve for and quantize the right factor.
///
/// Theory-mode ranges are `σ₁` and `2κ(A_k)` for the scaled basis, `1` and `σ₁` for the
/// unscaled one. A saturated attempt re-draws the dither and, when rotating, the rotation.
pub fn lplr_svd(a: &Matrix, cfg: &CompressionConfig) -> Result<(Factorization, CompressionReport)> {
    let mut run = Run::new(a, cfg, Algorithm::LplrSvd)?;
    let (n, d) = a.shape();
    let k = cfg.rank;
    check_rank(a, k)?;
    let dec = run.timed_svd()?;
    let (basis, _) = svd_factors(&dec, k, cfg.lsvd_basis, n, d);

    let theory = match theory_eps(cfg) {
        Some(_) if dec.rank() > 0 => {
            if k > dec.rank() {
                return Err(Error::InvalidArgument(format!(
                    "theory ranges need k ≤ rank(A) = {}, got {k}",
                    dec.rank()
                )));
            }
            let s1 = dec.singular_values[0];
            Some(match cfg.lsvd_basis {
                LsvdBasis::Scaled => (s1, 2.0 * s1 / dec.singular_values[k - 1]),
                LsvdBasis::Unscaled => (1.0, s1),
            })
        }
        _ => None,
    };

    for attempt in 0..run.attempts() {
        let rotated;
        let input = if cfg.lsvd_rotation {
            let t = Instant::now();
            let g = gaussian_matrix(
                k,
                k,
                1.0 / k as f64,
                derive_seed(cfg.seed, tag::ROTATION, attempt as u64),
            );
            rotated = basis.matmul(&g)?;
            run.timings.sketch += t.elapsed().as_secs_f64();
            &rotated
        } else {
            &basis
        };

        let r_q = theory.map_or_else(|| input.max_abs(), |r| r.0);
        let dither = derive_seed(cfg.seed, tag::LEFT_DITHER, attempt as u64);
        let left = match run.quantize(input, r_q, cfg.bits, dither, attempt, "left")? {
            Attempt::Done(q) => q,
            Attempt::Saturated => continue,
        };

        let w = run.solve(&left.dequantize())?.x;
        let r_q2 = theory.map_or_else(|| w.max_abs(), |r| r.1);
        let dither = derive_seed(cfg.seed, tag::RIGHT_DITHER, attempt as u64);
        let right = match run.quantize(&w, r_q2, cfg.bits2, dither, attempt, "right")? {
            Attempt::Done(q) => q,
            Attempt::Saturated => continue,
        };
        return run.finish(left, Some(right), None, attempt);
    }
    Err(Error::SaturationExhausted {
        attempts: run.attempts(),
    })
}

/// `L = Q(U_k Σ_k)`, `R = Q′(V_kᵀ)` with no least-squares step. Theory ranges are `σ₁` and 1.
pub fn dsvd(a: &Matrix, cfg: &CompressionConfig) -> Result<(Factorization, CompressionReport)> {
    let mut run = Run::new(a, cfg, Algorithm::Dsvd)?;
    let (n, d) = a.shape();
    let k = cfg.rank;
    check_rank(a, k)?;
    let dec = run.timed_svd()?;
    let (left_in, right_in) = svd_factors(&dec, k, LsvdBasis::Scaled, n, d);
    let theory = match theory_eps(cfg) {
        Some(_) if dec.rank() > 0 => Some((dec.singular_values[0], 1.0)),
        _ => None,
    };

    for attempt in 0..run.attempts() {
        let r_q = theory.map_or_else(|| left_in.max_abs(), |r| r.0);
        let dither = derive_seed(cfg.seed, tag::LEFT_DITHER, attempt as u64);
        let left = match run.quantize(&left_in, r_q, cfg.bits, dither, attempt, "left")? {
            Attempt::Done(q) => q,
            Attempt::Saturated => continue,
        };
        let r_q2 = theory.map_or_else(|| right_in.max_abs(), |r| r.1);
        let dither = derive_seed(cfg.seed, tag::RIGHT_DITHER, attempt as u64);
        let right = match run.quantize(&right_in, r_q2, cfg.bits2, dither, attempt, "right")? {
            Attempt::Done(q) => q,
            Attempt::Saturated => continue,
        };
        return run.finish(left, Some(right), None, attempt);
    }
    Err(Error::SaturationExhausted {
        attempts: run.attempts(),
    })
}

/// Entrywise quantization of `A` with `cfg.bits` bits. The grid always covers the data, so
/// this never saturates.
pub fn naive(a: &Matrix, cfg: &CompressionConfig) -> Result<(Factorization, CompressionReport)> {
    let mut run = Run::new(a, cfg, Algorithm::Naive)?;
    if theory_eps(cfg).is_some() {
        run.warnings
            .push("naive quantization ignores theory ranges; using the data range".into());
    }
    let (input, range, affine) = match cfg.naive_range {
        NaiveRange::MaxAbs => (None, a.max_abs(), None),
        NaiveRange::MinMax => {
            let (lo, hi) = a.min_max();
            let center = 0.5 * (lo + hi);
            if center == 0.0 {
                (None, hi, None)
            } else {
                let shifted = a.map(|v| v - center);
                let half = shifted.max_abs();
                (
                    Some(shifted),
                    half,
                    Some(Affine {
                        alpha: 1.0,
                        beta: center,
                    }),
                )
            }
        }
    };
    let dither = derive_seed(cfg.seed, tag::NAIVE_DITHER, 0);
    let x = input.as_ref().unwrap_or(a);
    match run.quantize(x, range, cfg.bits, dither, 0, "left")? {
        Attempt::Done(q) => run.finish(q, None, affine, 0),
        Attempt::Saturated => unreachable!("range covers the data"),
    }
}

/// Naive quantization with default settings and the given seed.
pub fn naive_quant(a: &Matrix, bits: u32, seed: u64) -> Result<(Factorization, CompressionReport)> {
    naive(a, &CompressionConfig::naive(bits).with_seed(seed))
}
