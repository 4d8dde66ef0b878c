//! Low-precision low-rank compressors and their baselines.

mod algorithms;
mod config;
mod factorization;
mod ranges;
mod report;
mod shift;

pub use algorithms::{compress, dsvd, lplr, lplr_svd, naive, naive_quant};
pub use config::{Algorithm, CompressionConfig, LsvdBasis, NaiveRange, RangeMode};
pub use factorization::{reconstruct, Affine, Factorization, Provenance};
pub use ranges::{bit_thresholds, select_dynamic_ranges, theory_ranges, BitThresholds};
pub use report::{CompressionReport, SaturationEvent, SolverInfo, StageTimings};
pub use shift::normalize_shift;

#[cfg(test)]
mod tests;
