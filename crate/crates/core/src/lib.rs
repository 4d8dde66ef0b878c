//! Low-precision low-rank matrix factorization.
//!
//! A matrix `A` is compressed to `L · R`, where both factors are stored with a
//! few bits per entry. The left factor comes from a Gaussian sketch `A S` (or a
//! truncated SVD) and is quantized with a uniformly dithered quantizer; the right
//! factor solves a least-squares problem against the quantized basis and is
//! quantized in turn.
//!
//! ```
//! use lplr::compressor::{compress, reconstruct, CompressionConfig};
//! use lplr::eval::{relative_fro_error, shepp_logan};
//!
//! let a = shepp_logan(64).unwrap();
//! let cfg = CompressionConfig::lplr(12, 8, 8).with_seed(3);
//! let (factors, report) = compress(&a, &cfg).unwrap();
//! let err = relative_fro_error(&reconstruct(&factors), &a).unwrap();
//! assert_eq!(report.relative_error, Some(err));
//! assert!(err < 0.5);
//! ```

pub mod compressor;
pub mod error;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod quantize;
pub mod sketch;
mod stream;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use quantize::{QuantizedMatrix, QuantizerSpec, Rounding};

#[cfg(test)]
pub(crate) mod test_util {
    use rand::rngs::StdRng;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    use crate::Matrix;

    /// Standard normal entries from an RNG unrelated to the crate's own streams.
    pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = StdRng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }
}
