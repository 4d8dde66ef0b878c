use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Binary (`P5`) greymap with maxval 255. Entries are rounded and clamped to `[0, 255]`.
pub fn encode_pgm(m: &Matrix) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", m.cols(), m.rows()).into_bytes();
    out.extend(m.as_slice().iter().map(|v| v.round().clamp(0.0, 255.0) as u8));
    out
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("PGM {what} is missing or not a number")))
    }
}

/// Reads a `P5` greymap with maxval 255 into a matrix of pixel values.
pub fn decode_pgm(bytes: &[u8]) -> Result<Matrix> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::MalformedHeader("only binary P5 greymaps are supported".into()));
    }
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval != 255 {
        return Err(Error::MalformedHeader(format!("PGM maxval must be 255, got {maxval}")));
    }
    if !bytes.get(h.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::MalformedHeader("PGM header must end in a whitespace byte".into()));
    }
    let start = h.pos + 1;
    let expected = start + width * height;
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
    Matrix::new(height, width, bytes[start..].iter().map(|&b| b as f64).collect())
}
