use serde::{Deserialize, Serialize};

use crate::compressor::config::{Algorithm, CompressionConfig};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::quantize::QuantizedMatrix;

/// Post-hoc correction `α · Â + β · J`, with `J` the all-ones matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub alpha: f64,
    pub beta: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine {
        alpha: 1.0,
        beta: 0.0,
    };

    pub fn apply(&self, m: &Matrix) -> Matrix {
        m.map(|v| self.alpha * v + self.beta)
    }
}

/// Where a factorization came from. Not stored in factor files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    /// Attempts discarded because a quantizer saturated.
    pub retries: u32,
    pub config: CompressionConfig,
}

/// `A ≈ L · R` with both factors quantized. Naive quantization stores the whole matrix as
/// `L` and has no right factor.
#[derive(Clone, Debug, PartialEq)]
pub struct Factorization {
    algorithm: Algorithm,
    left: QuantizedMatrix,
    right: Option<QuantizedMatrix>,
    affine: Option<Affine>,
    provenance: Option<Provenance>,
}

impl Factorization {
    pub fn new(
        algorithm: Algorithm,
        left: QuantizedMatrix,
        right: Option<QuantizedMatrix>,
        affine: Option<Affine>,
    ) -> Result<Self> {
        match (&right, algorithm) {
            (None, Algorithm::Naive) => {}
            (Some(r), a) if a != Algorithm::Naive => {
                if r.rows() != left.cols() {
                    return Err(Error::DimensionMismatch(format!(
                        "left factor has {} columns but right factor has {} rows",
                        left.cols(),
                        r.rows()
                    )));
                }
            }
            (_, a) => {
                return Err(Error::InvalidArgument(format!(
                    "{a} {} a right factor",
                    if a == Algorithm::Naive { "does not take" } else { "requires" }
                )))
            }
        }
        if let Some(Affine { alpha, beta }) = affine {
            if !(alpha.is_finite() && beta.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "affine pair ({alpha}, {beta}) is not finite"
                )));
            }
        }
        Ok(Factorization {
            algorithm,
            left,
            right,
            affine,
            provenance: None,
        })
    }

    pub(crate) fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub(crate) fn set_affine(&mut self, affine: Option<Affine>) {
        self.affine = affine;
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn left(&self) -> &QuantizedMatrix {
        &self.left
    }

    pub fn right(&self) -> Option<&QuantizedMatrix> {
        self.right.as_ref()
    }

    pub fn affine(&self) -> Option<Affine> {
        self.affine
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// Shape `(n, d)` of the approximated matrix.
    pub fn shape(&self) -> (usize, usize) {
        match &self.right {
            Some(r) => (self.left.rows(), r.cols()),
            None => (self.left.rows(), self.left.cols()),
        }
    }

    /// Inner dimension `m`; for naive quantization, the column count.
    pub fn width(&self) -> usize {
        self.left.cols()
    }

    /// `B·n·m + B′·m·d`, plus 128 bits when an affine pair is stored.
    pub fn payload_bits(&self) -> u64 {
        self.left.payload_bits()
            + self.right.as_ref().map_or(0, |r| r.payload_bits())
            + if self.affine.is_some() { 128 } else { 0 }
    }

    /// `L · R` before any affine correction.
    pub fn product(&self) -> Matrix {
        let l = self.left.dequantize();
        match &self.right {
            Some(r) => l.matmul(&r.dequantize()).expect("factor shapes checked on construction"),
            None => l,
        }
    }
}

/// `Â = L · R`, followed by `α Â + β J` when an affine pair is present.
pub fn reconstruct(f: &Factorization) -> Matrix {
    let p = f.product();
    match f.affine {
        Some(a) => a.apply(&p),
        None => p,
    }
}
