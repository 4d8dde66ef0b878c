use std::fs;
use std::path::Path;

use crate::compressor::{Affine, Algorithm, Factorization};
use crate::error::{Error, Result};
use crate::quantize::{QuantizedMatrix, QuantizerSpec};

pub const FACTOR_MAGIC: &[u8; 4] = b"LPLR";
pub const FACTOR_VERSION: u32 = 1;
/// Magic, version, algorithm, `n`, `m`, `d`, both bit widths, both ranges and the affine flag.
pub const FACTOR_HEADER_BYTES: usize = 4 + 4 + 1 + 3 * 8 + 2 + 2 * 8 + 1;

fn packed_len(count: usize, bits: u32) -> usize {
    (count * bits as usize).div_ceil(8)
}

/// Exact size of a factor file.
pub fn factor_file_size(n: usize, m: usize, d: usize, bits: u32, bits2: u32, affine: bool) -> usize {
    FACTOR_HEADER_BYTES + if affine { 16 } else { 0 } + packed_len(n * m, bits) + packed_len(m * d, bits2)
}

/// Row-major codes, `bits` each, least significant bit first; the last byte is zero-padded.
fn pack(codes: &[u32], bits: u32, out: &mut Vec<u8>) {
    let mut acc: u64 = 0;
    let mut filled = 0;
    for &c in codes {
        acc |= (c as u64) << filled;
        filled += bits;
        while filled >= 8 {
            out.push(acc as u8);
            acc >>= 8;
            filled -= 8;
        }
    }
    if filled > 0 {
        out.push(acc as u8);
    }
}

fn unpack(bytes: &[u8], count: usize, bits: u32, block: &'static str) -> Result<Vec<u32>> {
    let mask = (1u64 << bits) - 1;
    let mut codes = Vec::with_capacity(count);
    let mut acc: u64 = 0;
    let mut filled = 0;
    let mut iter = bytes.iter();
    for _ in 0..count {
        while filled < bits {
            acc |= (*iter.next().expect("block length checked by caller") as u64) << filled;
            filled += 8;
        }
        codes.push((acc & mask) as u32);
        acc >>= bits;
        filled -= bits;
    }
    if acc != 0 {
        return Err(Error::CodeOverflow { block, bits });
    }
    Ok(codes)
}

pub fn encode_factorization(f: &Factorization) -> Vec<u8> {
    let (n, d) = f.shape();
    let left = f.left();
    let m = left.cols();
    let (bits2, range2) = f
        .right()
        .map_or((0, 0.0), |r| (r.spec().bits(), r.spec().dynamic_range()));
    let affine = f.affine();
    let mut out = Vec::with_capacity(factor_file_size(n, m, d, left.spec().bits(), bits2, affine.is_some()));
    out.extend_from_slice(FACTOR_MAGIC);
    out.extend_from_slice(&FACTOR_VERSION.to_le_bytes());
    out.push(f.algorithm().id());
    for dim in [n, m, d] {
        out.extend_from_slice(&(dim as u64).to_le_bytes());
    }
    out.push(left.spec().bits() as u8);
    out.push(bits2 as u8);
    out.extend_from_slice(&left.spec().dynamic_range().to_le_bytes());
    out.extend_from_slice(&range2.to_le_bytes());
    out.push(affine.is_some() as u8);
    if let Some(a) = affine {
        out.extend_from_slice(&a.alpha.to_le_bytes());
        out.extend_from_slice(&a.beta.to_le_bytes());
    }
    pack(left.codes(), left.spec().bits(), &mut out);
    if let Some(r) = f.right() {
        pack(r.codes(), bits2, &mut out);
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> &'a [u8] {
        let s = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        s
    }

    fn u8(&mut self) -> u8 {
        self.take(1)[0]
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take(8).try_into().unwrap())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take(8).try_into().unwrap())
    }
}

fn dim(v: u64, name: &str) -> Result<usize> {
    usize::try_from(v)
        .ok()
        .filter(|&v| v > 0)
        .ok_or_else(|| Error::MalformedHeader(format!("{name} = {v} is not a valid dimension")))
}

pub fn decode_factorization(bytes: &[u8]) -> Result<Factorization> {
    if bytes.len() < 8 {
        return Err(Error::MalformedHeader(format!("factor file is only {} bytes", bytes.len())));
    }
    if &bytes[..4] != FACTOR_MAGIC {
        return Err(Error::MalformedHeader("missing LPLR magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FACTOR_VERSION {
        return Err(Error::VersionMismatch {
            expected: FACTOR_VERSION,
            found: version,
        });
    }
    if bytes.len() < FACTOR_HEADER_BYTES {
        return Err(Error::TruncatedPayload {
            expected: FACTOR_HEADER_BYTES,
            found: bytes.len(),
        });
    }
    let mut c = Cursor { bytes, pos: 8 };
    let alg_id = c.u8();
    let algorithm = Algorithm::from_id(alg_id)
        .ok_or_else(|| Error::MalformedHeader(format!("unknown algorithm id {alg_id}")))?;
    let n = dim(c.u64(), "n")?;
    let m = dim(c.u64(), "m")?;
    let d = dim(c.u64(), "d")?;
    let bits = c.u8() as u32;
    let bits2 = c.u8() as u32;
    let range = c.f64();
    let range2 = c.f64();
    let has_affine = match c.u8() {
        0 => false,
        1 => true,
        other => return Err(Error::MalformedHeader(format!("affine flag must be 0 or 1, got {other}"))),
    };
    let naive = algorithm == Algorithm::Naive;
    if naive && (m != d || bits2 != 0) {
        return Err(Error::MalformedHeader(format!(
            "naive quantization is stored with m = d and B' = 0, got m = {m}, d = {d}, B' = {bits2}"
        )));
    }
    if !naive && bits2 == 0 {
        return Err(Error::MalformedHeader("right-factor bit width is 0".into()));
    }

    let left_len = n
        .checked_mul(m)
        .map(|c| packed_len(c, bits))
        .ok_or_else(|| Error::MalformedHeader("n·m overflows".into()))?;
    let right_len = m
        .checked_mul(d)
        .map(|c| packed_len(c, bits2))
        .ok_or_else(|| Error::MalformedHeader("m·d overflows".into()))?;
    let expected = FACTOR_HEADER_BYTES + if has_affine { 16 } else { 0 } + left_len + right_len;
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

    let affine = has_affine.then(|| Affine {
        alpha: c.f64(),
        beta: c.f64(),
    });
    let left_spec = QuantizerSpec::from_stored(range, bits)?;
    let left = QuantizedMatrix::new(n, m, unpack(c.take(left_len), n * m, bits, "left")?, left_spec)?;
    let right = if naive {
        None
    } else {
        let spec = QuantizerSpec::from_stored(range2, bits2)?;
        Some(QuantizedMatrix::new(m, d, unpack(c.take(right_len), m * d, bits2, "right")?, spec)?)
    };
    Factorization::new(algorithm, left, right, affine)
}

pub fn save_factorization(path: impl AsRef<Path>, f: &Factorization) -> Result<()> {
    fs::write(path, encode_factorization(f))?;
    Ok(())
}

pub fn load_factorization(path: impl AsRef<Path>) -> Result<Factorization> {
    decode_factorization(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compressor::{compress, reconstruct, CompressionConfig};
    use crate::test_util::random_matrix;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_factorization(rng: &mut StdRng) -> Factorization {
        let algorithm = Algorithm::ALL[rng.gen_range(0..4)];
        let n = rng.gen_range(1..9);
        let d = rng.gen_range(1..9);
        let m = if algorithm == Algorithm::Naive { d } else { rng.gen_range(1..6) };
        let mut block = |rows: usize, cols: usize| {
            let bits = rng.gen_range(1..=31);
            let spec = if rng.gen_bool(0.1) {
                QuantizerSpec::degenerate(bits).unwrap()
            } else {
                QuantizerSpec::new(rng.gen_range(1e-3..1e3), bits).unwrap()
            };
            let codes = (0..rows * cols).map(|_| rng.gen_range(0..=spec.max_code())).collect();
            QuantizedMatrix::new(rows, cols, codes, spec).unwrap()
        };
        let left = block(n, m);
        let right = (algorithm != Algorithm::Naive).then(|| block(m, d));
        let affine = rng.gen_bool(0.5).then(|| Affine {
            alpha: rng.gen_range(-2.0..2.0),
            beta: rng.gen_range(-2.0..2.0),
        });
        Factorization::new(algorithm, left, right, affine).unwrap()
    }

    #[test]
    fn packing_is_lsb_first() {
        let mut out = Vec::new();
        pack(&[1, 2, 3], 3, &mut out);
        // 001 | 010 | 011 → bits 0..9 = 1,0,0, 0,1,0, 1,1,0
        assert_eq!(out, vec![0b1101_0001, 0b0000_0000]);
        assert_eq!(unpack(&out, 3, 3, "left").unwrap(), vec![1, 2, 3]);
        let mut wide = Vec::new();
        pack(&[u32::MAX >> 1, 5], 31, &mut wide);
        assert_eq!(unpack(&wide, 2, 31, "left").unwrap(), vec![u32::MAX >> 1, 5]);
    }

    #[test]
    fn smallest_file_size() {
        let spec = QuantizerSpec::new(1.0, 1).unwrap();
        let q = QuantizedMatrix::new(2, 2, vec![0, 1, 1, 0], spec).unwrap();
        let f = Factorization::new(Algorithm::Lplr, q.clone(), Some(q), None).unwrap();
        let bytes = encode_factorization(&f);
        assert_eq!(bytes.len(), FACTOR_HEADER_BYTES + 1 + 1);
        assert_eq!(bytes.len(), factor_file_size(2, 2, 2, 1, 1, false));
        assert_eq!(decode_factorization(&bytes).unwrap(), f);
    }

    #[test]
    fn compressed_round_trip_reconstructs_bit_identically() {
        let a = random_matrix(13, 10, 1);
        for cfg in [
            CompressionConfig::lplr(4, 5, 7),
            CompressionConfig::lplr_svd(3, 8, 8).with_rotation(true),
            CompressionConfig::dsvd(3, 2, 9).with_normalize_shift(true),
            CompressionConfig::naive(3),
        ] {
            let (f, _) = compress(&a, &cfg).unwrap();
            let back = decode_factorization(&encode_factorization(&f)).unwrap();
            assert_eq!(back.provenance(), None);
            let (x, y) = (reconstruct(&f), reconstruct(&back));
            assert!(x.as_slice().iter().zip(y.as_slice()).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }

    #[test]
    fn twenty_random_round_trips() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let f = random_factorization(&mut rng);
            let bytes = encode_factorization(&f);
            let (n, d) = f.shape();
            let bits2 = f.right().map_or(0, |r| r.spec().bits());
            assert_eq!(
                bytes.len(),
                factor_file_size(n, f.width(), d, f.left().spec().bits(), bits2, f.affine().is_some())
            );
            assert_eq!(decode_factorization(&bytes).unwrap(), f);
        }
    }

    #[test]
    fn corrupted_padding_is_code_overflow() {
        // 2×2 codes at 3 bits fill 12 of 16 bits; the top nibble of the last byte is padding.
        let spec = QuantizerSpec::new(1.0, 3).unwrap();
        let q = QuantizedMatrix::new(2, 2, vec![7, 0, 5, 1], spec).unwrap();
        let f = Factorization::new(Algorithm::Naive, q, None, None).unwrap();
        let mut bytes = encode_factorization(&f);
        *bytes.last_mut().unwrap() |= 0x80;
        assert!(matches!(
            decode_factorization(&bytes),
            Err(Error::CodeOverflow { block: "left", bits: 3 })
        ));
    }

    #[test]
    fn header_diagnostics() {
        let mut rng = StdRng::seed_from_u64(8);
        let bytes = encode_factorization(&random_factorization(&mut rng));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(decode_factorization(&v2), Err(Error::VersionMismatch { found: 2, .. })));
        assert!(matches!(
            decode_factorization(&bytes[..bytes.len() - 1]),
            Err(Error::TruncatedPayload { .. })
        ));
        assert!(matches!(decode_factorization(&bytes[..20]), Err(Error::TruncatedPayload { .. })));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(decode_factorization(&long), Err(Error::TrailingData { .. })));
        let mut bad_alg = bytes.clone();
        bad_alg[8] = 9;
        assert!(matches!(decode_factorization(&bad_alg), Err(Error::MalformedHeader(_))));
        let mut bad_bits = bytes;
        bad_bits[33] = 40;
        assert!(decode_factorization(&bad_bits).is_err());
    }

    proptest! {
        #[test]
        fn round_trips(seed in any::<u64>()) {
            let f = random_factorization(&mut StdRng::seed_from_u64(seed));
            prop_assert_eq!(decode_factorization(&encode_factorization(&f)).unwrap(), f);
        }
    }
}
