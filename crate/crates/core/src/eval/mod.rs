//! Bit-budget parity, error metrics, Monte-Carlo checks of the error analysis, nearest-neighbour
//! classification, the phantom generator and parameter sweeps.

mod knn;
mod metrics;
mod phantom;
mod sweep;
mod verify;

pub use knn::{classification_metrics, knn_classify, knn_predict, ClassMetrics, KnnResult};
pub use metrics::{parity_sketch_size, relative_fro_error, thm1_bound, ParityBudget};
pub use phantom::{shepp_logan, Ellipse, MODIFIED_SHEPP_LOGAN};
pub use sweep::{sweep, Budget, SweepGrid, SweepRow, SweepSummary, SweepTable};
pub use verify::{
    dither_moments, verify_equalization, verify_sketched_ls, verify_wishart_trace, EqualizationCheck,
    SketchedLsCheck, SketchedLsSetup, WishartCheck,
};
