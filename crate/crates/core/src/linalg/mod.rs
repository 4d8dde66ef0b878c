//! Dense linear algebra: matrices, SVD, least squares and spectral statistics.

mod lstsq;
mod matrix;
mod stats;
mod svd;

pub use lstsq::{lstsq, LstsqMethod, LstsqSolution};
pub use matrix::Matrix;
pub use stats::{spectrum_stats, SpectrumStats};
pub(crate) use stats::spectrum_stats_from;
pub use svd::{best_rank_k, pinv, svd, truncate, SvdResult, DEFAULT_RANK_TOLERANCE};
