use serde::{Deserialize, Serialize};

use crate::compressor::config::Algorithm;
use crate::compressor::factorization::Affine;

/// Seconds spent in each stage of a compression call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    /// Sketch generation and `A S`.
    pub sketch: f64,
    /// SVD of the input (SVD-based algorithms and theory-mode statistics).
    pub svd: f64,
    pub quantize: f64,
    /// Least-squares solve for the right factor.
    pub solve: f64,
    pub total: f64,
}

/// One saturated quantization attempt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationEvent {
    pub attempt: u32,
    /// `"left"` or `"right"`.
    pub factor: String,
    pub row: usize,
    pub col: usize,
    pub value: f64,
    pub range: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub method: String,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub algorithm: Algorithm,
    pub n: usize,
    pub d: usize,
    /// Inner dimension of the factorization (0 for naive quantization).
    pub m: usize,
    pub bits: u32,
    /// Right-factor bits (0 for naive quantization).
    pub bits2: u32,
    pub range_left: f64,
    pub range_right: Option<f64>,
    pub payload_bits: u64,
    /// `64 · n · d`.
    pub uncompressed_bits: u64,
    /// `‖Â − A‖_F / ‖A‖_F`; absent when `A = 0`.
    pub relative_error: Option<f64>,
    pub seed: u64,
    pub retries: u32,
    pub saturation_log: Vec<SaturationEvent>,
    /// A quantizer input was identically zero and was stored exactly.
    pub exact_zero: bool,
    pub affine: Option<Affine>,
    pub solver: Option<SolverInfo>,
    pub timings: StageTimings,
    pub warnings: Vec<String>,
}

impl CompressionReport {
    /// Average stored bits per original entry.
    pub fn bits_per_entry(&self) -> f64 {
        self.payload_bits as f64 / (self.n * self.d) as f64
    }
}
