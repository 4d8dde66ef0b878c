use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::compressor::{compress, Algorithm, CompressionConfig, CompressionReport, RangeMode};
use crate::error::Result;
use crate::eval::metrics::parity_sketch_size;
use crate::linalg::{LstsqMethod, Matrix};
use crate::quantize::{Rounding, MAX_BITS};

/// A bit allocation for one group of sweep cells.
///
/// The width comes from bit parity with `bnq`-bit naive quantization unless `rank` is given.
/// Naive quantization itself runs at `bnq` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub bits: u32,
    pub bits2: u32,
    pub bnq: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
}

impl Budget {
    pub fn parity(bits: u32, bits2: u32, bnq: u32) -> Self {
        Budget {
            bits,
            bits2,
            bnq,
            rank: None,
        }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub algorithms: Vec<Algorithm>,
    pub budgets: Vec<Budget>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub range_mode: RangeMode,
    #[serde(default)]
    pub rounding: Rounding,
    #[serde(default)]
    pub solver: LstsqMethod,
    /// Rotate the SVD basis in the LPLR-SVD variant.
    #[serde(default)]
    pub lsvd_rotation: bool,
    #[serde(default)]
    pub normalize_shift: bool,
}

impl SweepGrid {
    pub fn new(algorithms: Vec<Algorithm>, budgets: Vec<Budget>, seeds: Vec<u64>) -> Self {
        SweepGrid {
            algorithms,
            budgets,
            seeds,
            range_mode: RangeMode::DataDriven,
            rounding: Rounding::Dithered,
            solver: LstsqMethod::ClosedForm,
            lsvd_rotation: false,
            normalize_shift: false,
        }
    }

    /// The compression config of one cell. Bit widths above the quantizer limit are
    /// clamped; parity still uses the nominal widths.
    pub fn config(&self, algorithm: Algorithm, budget: &Budget, n: usize, d: usize, seed: u64) -> Result<CompressionConfig> {
        let base = if algorithm == Algorithm::Naive {
            CompressionConfig::naive(budget.bnq.min(MAX_BITS))
        } else {
            let m = match budget.rank {
                Some(m) => m,
                None => parity_sketch_size(n, d, budget.bits, budget.bits2, budget.bnq)?.m,
            };
            CompressionConfig::for_algorithm(
                algorithm,
                m,
                budget.bits.min(MAX_BITS),
                budget.bits2.min(MAX_BITS),
            )
        };
        Ok(CompressionConfig {
            range_mode: self.range_mode,
            rounding: self.rounding,
            solver: self.solver,
            lsvd_rotation: self.lsvd_rotation,
            normalize_shift: self.normalize_shift,
            seed,
            ..base
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub algorithm: Algorithm,
    pub budget: Budget,
    pub seed: u64,
    /// Wall-clock seconds for the whole compression call.
    pub seconds: f64,
    pub report: CompressionReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub algorithm: Algorithm,
    pub budget: Budget,
    pub m: usize,
    pub seeds: usize,
    pub mean_error: Option<f64>,
    /// Sample standard deviation; zero for a single seed.
    pub std_error: Option<f64>,
    /// Error of the first seed alone.
    pub single_seed_error: Option<f64>,
    pub mean_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub n: usize,
    pub d: usize,
    pub rows: Vec<SweepRow>,
    pub summaries: Vec<SweepSummary>,
}

/// Runs every (algorithm, budget, seed) cell of `grid` on `a`.
///
/// Cells run one after another so their wall times are comparable.
pub fn sweep(a: &Matrix, grid: &SweepGrid) -> Result<SweepTable> {
    let (n, d) = a.shape();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &algorithm in &grid.algorithms {
        for budget in &grid.budgets {
            let first = rows.len();
            let mut m = 0;
            for &seed in &grid.seeds {
                let cfg = grid.config(algorithm, budget, n, d, seed)?;
                let start = Instant::now();
                let (_, report) = compress(a, &cfg)?;
                let seconds = start.elapsed().as_secs_f64();
                m = report.m;
                rows.push(SweepRow {
                    algorithm,
                    budget: *budget,
                    seed,
                    seconds,
                    report,
                });
            }
            summaries.push(summarize(algorithm, *budget, m, &rows[first..]));
        }
    }
    Ok(SweepTable {
        n,
        d,
        rows,
        summaries,
    })
}

fn summarize(algorithm: Algorithm, budget: Budget, m: usize, rows: &[SweepRow]) -> SweepSummary {
    let errors: Vec<f64> = rows.iter().filter_map(|r| r.report.relative_error).collect();
    let (mean_error, std_error) = if errors.is_empty() {
        (None, None)
    } else {
        let k = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / k;
        let var = if errors.len() > 1 {
            errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        (Some(mean), Some(var.sqrt()))
    };
    let mean_seconds = if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|r| r.seconds).sum::<f64>() / rows.len() as f64
    };
    SweepSummary {
        algorithm,
        budget,
        m,
        seeds: rows.len(),
        mean_error,
        std_error,
        single_seed_error: rows.first().and_then(|r| r.report.relative_error),
        mean_seconds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::random_matrix;

    #[test]
    fn single_cell_matches_direct_call() {
        let a = random_matrix(30, 24, 1);
        let grid = SweepGrid::new(
            vec![Algorithm::Lplr],
            vec![Budget::parity(8, 8, 2)],
            vec![5],
        );
        let table = sweep(&a, &grid).unwrap();
        assert_eq!(table.rows.len(), 1);
        let m = parity_sketch_size(30, 24, 8, 8, 2).unwrap().m;
        let (_, direct) = compress(&a, &CompressionConfig::lplr(m, 8, 8).with_seed(5)).unwrap();
        assert_eq!(table.rows[0].report.relative_error, direct.relative_error);
        let s = &table.summaries[0];
        assert_eq!((s.m, s.seeds, s.std_error), (m, 1, Some(0.0)));
        assert_eq!(s.mean_error, direct.relative_error);
    }

    #[test]
    fn deterministic_cells_have_zero_spread() {
        let a = random_matrix(20, 20, 2);
        let mut grid = SweepGrid::new(
            vec![Algorithm::Dsvd],
            vec![Budget {
                rank: Some(4),
                ..Budget::parity(6, 6, 1)
            }],
            (0..4).collect(),
        );
        grid.rounding = Rounding::Nearest;
        let table = sweep(&a, &grid).unwrap();
        assert_eq!(table.summaries[0].std_error, Some(0.0));
        assert_eq!(table.summaries[0].m, 4);
    }

    #[test]
    fn oversized_bits_are_clamped_for_quantization_only() {
        let grid = SweepGrid::new(vec![], vec![], vec![]);
        let cfg = grid
            .config(Algorithm::Lplr, &Budget::parity(32, 32, 1), 1000, 1000, 0)
            .unwrap();
        assert_eq!((cfg.rank, cfg.bits, cfg.bits2), (15, MAX_BITS, MAX_BITS));
        let nq = grid.config(Algorithm::Naive, &Budget::parity(32, 32, 2), 1000, 1000, 0).unwrap();
        assert_eq!(nq.bits, 2);
    }

    #[test]
    fn grid_json_defaults() {
        let grid: SweepGrid = serde_json::from_str(
            r#"{"algorithms": ["lplr", "nq"], "budgets": [{"bits": 8, "bits2": 8, "bnq": 1}]}"#,
        )
        .unwrap();
        assert_eq!(grid.seeds, vec![0]);
        assert_eq!(grid.algorithms, vec![Algorithm::Lplr, Algorithm::Naive]);
        assert_eq!(grid.budgets[0].rank, None);
    }
}
