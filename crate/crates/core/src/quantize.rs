//! Uniform scalar quantization with dithered (stochastic) rounding.
//!
//! A [`QuantizerSpec`] with dynamic range `R` and `B` bits covers `[−R, R]` with
//! `M = 2^B` equispaced points; code `c` stands for `−R + c·Δ` with
//! `Δ = 2R/(M − 1)`. Dithered rounding picks one of the two neighbouring grid
//! points with probabilities that make the output unbiased.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::stream::row_stream;

pub const MAX_BITS: u32 = 31;

/// Rounding rule used to map a value onto the grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// Round up with probability equal to the fractional position inside the cell.
    #[default]
    Dithered,
    /// Round to the closest grid point.
    Nearest,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    dynamic_range: f64,
    bits: u32,
}

impl QuantizerSpec {
    pub fn new(dynamic_range: f64, bits: u32) -> Result<Self> {
        if !(dynamic_range > 0.0 && dynamic_range.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dynamic range must be positive and finite, got {dynamic_range}"
            )));
        }
        check_bits(bits)?;
        let spec = QuantizerSpec { dynamic_range, bits };
        if !(spec.resolution() > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dynamic range {dynamic_range} is too small for {bits} bits"
            )));
        }
        Ok(spec)
    }

    /// A zero-width grid: every code decodes to exactly 0.
    ///
    /// Used when the quantizer input is identically zero, where `Δ` would otherwise be undefined.
    pub fn degenerate(bits: u32) -> Result<Self> {
        check_bits(bits)?;
        Ok(QuantizerSpec {
            dynamic_range: 0.0,
            bits,
        })
    }

    /// Rebuilds a spec read from storage; accepts the degenerate `R = 0` grid.
    pub(crate) fn from_stored(dynamic_range: f64, bits: u32) -> Result<Self> {
        if dynamic_range == 0.0 {
            Self::degenerate(bits)
        } else {
            Self::new(dynamic_range, bits)
        }
    }

    pub fn dynamic_range(&self) -> f64 {
        self.dynamic_range
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn is_degenerate(&self) -> bool {
        self.dynamic_range == 0.0
    }

    /// `M = 2^B`.
    pub fn levels(&self) -> u64 {
        1u64 << self.bits
    }

    pub fn max_code(&self) -> u32 {
        (self.levels() - 1) as u32
    }

    /// `Δ = 2R / (2^B − 1)`.
    pub fn resolution(&self) -> f64 {
        2.0 * self.dynamic_range / self.max_code() as f64
    }

    /// Grid value of `code`; the top code is exactly `+R`.
    pub fn value(&self, code: u32) -> f64 {
        if code == self.max_code() {
            self.dynamic_range
        } else {
            -self.dynamic_range + code as f64 * self.resolution()
        }
    }

    /// Maps `x ∈ [−R, R]` to a code given a uniform variate `u ∈ [0, 1)`.
    fn encode(&self, x: f64, rounding: Rounding, u: f64) -> u32 {
        if self.is_degenerate() {
            return 0;
        }
        let delta = self.resolution();
        let top = self.max_code();
        let pos = (x + self.dynamic_range) / delta;
        match rounding {
            Rounding::Dithered => {
                let k = (pos.floor().max(0.0) as u64).min(top as u64 - 1) as u32;
                let r = (x - self.value(k)) / delta;
                if u < r {
                    k + 1
                } else {
                    k
                }
            }
            Rounding::Nearest => (pos.round().max(0.0) as u64).min(top as u64) as u32,
        }
    }

    fn check(&self, x: f64) -> Result<()> {
        if x.abs() > self.dynamic_range || !x.is_finite() {
            return Err(Error::Saturated {
                row: 0,
                col: 0,
                value: x,
                range: self.dynamic_range,
            });
        }
        Ok(())
    }
}

fn check_bits(bits: u32) -> Result<()> {
    if !(1..=MAX_BITS).contains(&bits) {
        return Err(Error::InvalidArgument(format!(
            "bit budget must lie in 1..={MAX_BITS}, got {bits}"
        )));
    }
    Ok(())
}

/// Integer codes plus the grid they index.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedMatrix {
    rows: usize,
    cols: usize,
    codes: Vec<u32>,
    spec: QuantizerSpec,
}

impl QuantizedMatrix {
    pub fn new(rows: usize, cols: usize, codes: Vec<u32>, spec: QuantizerSpec) -> Result<Self> {
        if codes.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} codes for a {rows}x{cols} matrix",
                codes.len()
            )));
        }
        if let Some(pos) = codes.iter().position(|&c| c > spec.max_code()) {
            return Err(Error::InvalidArgument(format!(
                "code {} at index {pos} exceeds the {}-bit grid",
                codes[pos],
                spec.bits()
            )));
        }
        Ok(QuantizedMatrix {
            rows,
            cols,
            codes,
            spec,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn spec(&self) -> &QuantizerSpec {
        &self.spec
    }

    /// Storage cost in bits, `B · rows · cols`.
    pub fn payload_bits(&self) -> u64 {
        self.spec.bits() as u64 * (self.rows * self.cols) as u64
    }

    pub fn dequantize(&self) -> Matrix {
        let data = self.codes.iter().map(|&c| self.spec.value(c)).collect();
        Matrix::from_parts(self.rows, self.cols, data)
    }
}

/// Dithered quantization of one value. `|x| > R` is a saturation error.
pub fn quantize_scalar(x: f64, spec: &QuantizerSpec, rng: &mut impl Rng) -> Result<u32> {
    spec.check(x)?;
    Ok(spec.encode(x, Rounding::Dithered, rng.gen()))
}

/// Clipped dithered quantizer: values outside `[−R, R]` map to the nearest endpoint.
pub fn quantize_clipped(x: f64, spec: &QuantizerSpec, rng: &mut impl Rng) -> u32 {
    let u = rng.gen();
    let r = spec.dynamic_range();
    spec.encode(x.clamp(-r, r), Rounding::Dithered, u)
}

/// `(max |x_ij|, max |x_ij| > R)`.
pub fn check_saturation(x: &Matrix, range: f64) -> (f64, bool) {
    let max_abs = x.max_abs();
    (max_abs, max_abs > range)
}

/// Entrywise dithered quantization, deterministic in `seed`.
pub fn quantize_matrix(x: &Matrix, spec: &QuantizerSpec, seed: u64) -> Result<QuantizedMatrix> {
    quantize_matrix_with(x, spec, Rounding::Dithered, seed)
}

/// Entrywise quantization. Entry `(i, j)` uses the `j`-th uniform of row stream `i`, so the
/// result does not depend on how rows are scheduled across threads.
pub fn quantize_matrix_with(
    x: &Matrix,
    spec: &QuantizerSpec,
    rounding: Rounding,
    seed: u64,
) -> Result<QuantizedMatrix> {
    let (rows, cols) = x.shape();
    if let Some(pos) = x.as_slice().iter().position(|v| v.abs() > spec.dynamic_range()) {
        return Err(Error::Saturated {
            row: pos / cols,
            col: pos % cols,
            value: x.as_slice()[pos],
            range: spec.dynamic_range(),
        });
    }
    let mut codes = vec![0u32; rows * cols];
    if cols > 0 {
        codes
            .par_chunks_mut(cols)
            .zip(x.as_slice().par_chunks(cols))
            .enumerate()
            .for_each(|(i, (out, row))| {
                let mut rng = row_stream(seed, i);
                for (c, &v) in out.iter_mut().zip(row) {
                    *c = spec.encode(v, rounding, rng.gen());
                }
            });
    }
    Ok(QuantizedMatrix {
        rows,
        cols,
        codes,
        spec: *spec,
    })
}
