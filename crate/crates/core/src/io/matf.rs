use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MATF_MAGIC: &[u8; 4] = b"MATF";
pub const MATF_VERSION: u32 = 1;
/// Magic, version, rows and cols.
pub const MATF_HEADER_BYTES: usize = 4 + 4 + 8 + 8;

/// Little-endian header followed by the entries in row-major order.
pub fn encode_matf(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(MATF_HEADER_BYTES + 8 * m.as_slice().len());
    out.extend_from_slice(MATF_MAGIC);
    out.extend_from_slice(&MATF_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_matf(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < MATF_HEADER_BYTES {
        return Err(Error::MalformedHeader(format!(
            "matrix file is {} bytes, shorter than its {MATF_HEADER_BYTES}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..4] != MATF_MAGIC {
        return Err(Error::MalformedHeader("missing MATF magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != MATF_VERSION {
        return Err(Error::VersionMismatch {
            expected: MATF_VERSION,
            found: version,
        });
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(MATF_HEADER_BYTES as u64))
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| Error::MalformedHeader(format!("dimensions {rows}x{cols} overflow")))?;
    if bytes.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::TrailingData {
            expected,
            found: bytes.len(),
        });
    }
    let data = bytes[MATF_HEADER_BYTES..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::new(rows as usize, cols as usize, data)
}
