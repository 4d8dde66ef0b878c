//! Matrix files (binary, CSV, PGM), packed factor files and JSON reports.

mod factor;
mod matf;
mod pgm;
mod text;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use factor::{
    decode_factorization, encode_factorization, factor_file_size, load_factorization,
    save_factorization, FACTOR_HEADER_BYTES, FACTOR_MAGIC, FACTOR_VERSION,
};
pub use matf::{decode_matf, encode_matf, MATF_HEADER_BYTES, MATF_MAGIC, MATF_VERSION};
pub use pgm::{decode_pgm, encode_pgm};
pub use text::{decode_csv, encode_csv};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Matf,
    Csv,
    Pgm,
}

impl MatrixFormat {
    /// Guesses the format from a file extension; anything unrecognised is treated as `matf`.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("csv") => MatrixFormat::Csv,
            Some("pgm") => MatrixFormat::Pgm,
            _ => MatrixFormat::Matf,
        }
    }
}

impl fmt::Display for MatrixFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatrixFormat::Matf => "matf",
            MatrixFormat::Csv => "csv",
            MatrixFormat::Pgm => "pgm",
        })
    }
}

impl FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matf" => Ok(MatrixFormat::Matf),
            "csv" => Ok(MatrixFormat::Csv),
            "pgm" => Ok(MatrixFormat::Pgm),
            other => Err(Error::InvalidArgument(format!(
                "unknown matrix format {other:?} (expected matf, csv or pgm)"
            ))),
        }
    }
}

pub fn encode_matrix(m: &Matrix, format: MatrixFormat) -> Vec<u8> {
    match format {
        MatrixFormat::Matf => encode_matf(m),
        MatrixFormat::Csv => encode_csv(m).into_bytes(),
        MatrixFormat::Pgm => encode_pgm(m),
    }
}

pub fn decode_matrix(bytes: &[u8], format: MatrixFormat) -> Result<Matrix> {
    match format {
        MatrixFormat::Matf => decode_matf(bytes),
        MatrixFormat::Csv => decode_csv(bytes),
        MatrixFormat::Pgm => decode_pgm(bytes),
    }
}

pub fn save_matrix(path: impl AsRef<Path>, m: &Matrix, format: MatrixFormat) -> Result<()> {
    fs::write(path, encode_matrix(m, format))?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<Matrix> {
    decode_matrix(&fs::read(path)?, format)
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}
