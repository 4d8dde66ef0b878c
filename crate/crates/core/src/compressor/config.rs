use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::LstsqMethod;
use crate::quantize::{Rounding, MAX_BITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Sketch, quantize the basis, solve for and quantize the right factor.
    Lplr,
    /// Quantized truncated-SVD basis, least-squares right factor.
    #[serde(rename = "lsvd", alias = "lplr_svd")]
    LplrSvd,
    /// Both truncated-SVD factors quantized directly.
    Dsvd,
    /// Every entry quantized independently.
    #[serde(rename = "nq", alias = "naive")]
    Naive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Lplr,
        Algorithm::LplrSvd,
        Algorithm::Dsvd,
        Algorithm::Naive,
    ];

    /// Identifier stored in factor files.
    pub fn id(self) -> u8 {
        match self {
            Algorithm::Lplr => 0,
            Algorithm::LplrSvd => 1,
            Algorithm::Dsvd => 2,
            Algorithm::Naive => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lplr => "lplr",
            Algorithm::LplrSvd => "lsvd",
            Algorithm::Dsvd => "dsvd",
            Algorithm::Naive => "nq",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lplr" => Ok(Algorithm::Lplr),
            "lsvd" | "lplr_svd" => Ok(Algorithm::LplrSvd),
            "dsvd" => Ok(Algorithm::Dsvd),
            "nq" | "naive" => Ok(Algorithm::Naive),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm {other:?} (expected lplr, lsvd, dsvd or nq)"
            ))),
        }
    }
}

/// How the quantizer dynamic ranges are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum RangeMode {
    /// Max-abs of the actual quantizer inputs; never saturates.
    #[default]
    DataDriven,
    /// High-probability bounds from the error analysis at tolerance `eps`; may saturate.
    Theory { eps: f64 },
}

/// Basis quantized by the SVD-based LPLR variant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LsvdBasis {
    /// `U_k Σ_k`.
    #[default]
    Scaled,
    /// `U_k`.
    Unscaled,
}

/// Grid placement for naive quantization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NaiveRange {
    /// Grid spans `[min, max]` of the input; the center is stored as an affine shift.
    #[default]
    MinMax,
    /// Symmetric grid `[−max|a|, max|a|]`.
    MaxAbs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionConfig {
    pub algorithm: Algorithm,
    /// Sketch size `m` (LPLR) or target rank `k` (SVD-based). Ignored by naive quantization.
    pub rank: usize,
    /// Bits for the left factor, or for every entry under naive quantization.
    pub bits: u32,
    /// Bits for the right factor.
    pub bits2: u32,
    pub range_mode: RangeMode,
    pub solver: LstsqMethod,
    pub rounding: Rounding,
    /// Multiply the SVD basis by a `k × k` Gaussian before quantizing.
    pub lsvd_rotation: bool,
    pub lsvd_basis: LsvdBasis,
    pub naive_range: NaiveRange,
    pub normalize_shift: bool,
    /// Target rank used by LPLR's theory-mode ranges; defaults to `max(m − 2, 1)`.
    pub theory_rank: Option<usize>,
    pub seed: u64,
    /// Extra attempts after a saturated one.
    pub max_retries: u32,
}

impl CompressionConfig {
    pub const DEFAULT_MAX_RETRIES: u32 = 10;

    fn base(algorithm: Algorithm, rank: usize, bits: u32, bits2: u32) -> Self {
        CompressionConfig {
            algorithm,
            rank,
            bits,
            bits2,
            range_mode: RangeMode::DataDriven,
            solver: LstsqMethod::ClosedForm,
            rounding: Rounding::Dithered,
            lsvd_rotation: false,
            lsvd_basis: LsvdBasis::Scaled,
            naive_range: NaiveRange::MinMax,
            normalize_shift: false,
            theory_rank: None,
            seed: 0,
            max_retries: Self::DEFAULT_MAX_RETRIES,
        }
    }

    pub fn lplr(sketch_size: usize, bits: u32, bits2: u32) -> Self {
        Self::base(Algorithm::Lplr, sketch_size, bits, bits2)
    }

    pub fn lplr_svd(rank: usize, bits: u32, bits2: u32) -> Self {
        Self::base(Algorithm::LplrSvd, rank, bits, bits2)
    }

    pub fn dsvd(rank: usize, bits: u32, bits2: u32) -> Self {
        Self::base(Algorithm::Dsvd, rank, bits, bits2)
    }

    pub fn naive(bits: u32) -> Self {
        Self::base(Algorithm::Naive, 0, bits, bits)
    }

    /// Config for `algorithm` with the given width and bit pair.
    pub fn for_algorithm(algorithm: Algorithm, rank: usize, bits: u32, bits2: u32) -> Self {
        Self::base(algorithm, rank, bits, bits2)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_range_mode(mut self, mode: RangeMode) -> Self {
        self.range_mode = mode;
        self
    }

    pub fn with_solver(mut self, solver: LstsqMethod) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_rounding(mut self, rounding: Rounding) -> Self {
        self.rounding = rounding;
        self
    }

    pub fn with_rotation(mut self, rotate: bool) -> Self {
        self.lsvd_rotation = rotate;
        self
    }

    pub fn with_normalize_shift(mut self, on: bool) -> Self {
        self.normalize_shift = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b) in [("bits", self.bits), ("bits2", self.bits2)] {
            if !(1..=MAX_BITS).contains(&b) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in 1..={MAX_BITS}, got {b}"
                )));
            }
        }
        if self.algorithm != Algorithm::Naive && self.rank == 0 {
            return Err(Error::InvalidArgument(format!(
                "{} needs a sketch size or rank of at least 1",
                self.algorithm
            )));
        }
        if let RangeMode::Theory { eps } = self.range_mode {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
            }
        }
        if self.theory_rank == Some(0) {
            return Err(Error::InvalidArgument("theory rank must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_ids_and_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(Algorithm::from_id(a.id()), Some(a));
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!(Algorithm::from_id(4), None);
        assert!("svd".parse::<Algorithm>().is_err());
    }

    #[test]
    fn validation() {
        assert!(CompressionConfig::lplr(4, 8, 8).validate().is_ok());
        assert!(CompressionConfig::lplr(0, 8, 8).validate().is_err());
        assert!(CompressionConfig::lplr(4, 0, 8).validate().is_err());
        assert!(CompressionConfig::dsvd(4, 8, 32).validate().is_err());
        assert!(CompressionConfig::naive(2).validate().is_ok());
        let theory = CompressionConfig::lplr(4, 8, 8).with_range_mode(RangeMode::Theory { eps: 0.0 });
        assert!(theory.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = CompressionConfig::lplr_svd(7, 6, 5)
            .with_rotation(true)
            .with_range_mode(RangeMode::Theory { eps: 0.5 })
            .with_solver(LstsqMethod::conjugate_gradient());
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<CompressionConfig>(&json).unwrap(), cfg);
    }
}
