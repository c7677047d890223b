//! `.phf` feature files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "PHF1"
//! 4       4     u32 rows (T)
//! 8       4     u32 cols (D)
//! 12      4     u32 layer_id
//! 16      4     u32 reserved, always 0
//! 20      4·T·D binary32 values, row-major
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use super::FeatureMatrix;

pub const MAGIC: [u8; 4] = *b"PHF1";
pub const HEADER_LEN: usize = 20;

#[derive(Debug, Error)]
pub enum PhfError {
    #[error("file is {len} bytes, shorter than the {HEADER_LEN}-byte header (truncated at byte offset {len})")]
    TruncatedHeader { len: usize },
    #[error("bad magic {found:?} at byte offset 0, expected \"PHF1\"")]
    BadMagic { found: [u8; 4] },
    #[error("reserved field at byte offset 16 is {value}, expected 0")]
    Reserved { value: u32 },
    #[error("empty shape {rows}x{cols} declared at byte offset 4")]
    EmptyShape { rows: u32, cols: u32 },
    #[error("payload truncated at byte offset {offset}: header declares {expected} bytes in total")]
    TruncatedPayload { offset: usize, expected: usize },
    #[error("{extra} trailing bytes after payload end at byte offset {offset}")]
    TrailingBytes { offset: usize, extra: usize },
    #[error("non-finite value at row {row}, col {col} (byte offset {offset})")]
    NonFinite { row: usize, col: usize, offset: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PhfError {
    /// Byte offset the error points at, when it has one.
    pub fn byte_offset(&self) -> Option<usize> {
        match *self {
            PhfError::TruncatedHeader { len } => Some(len),
            PhfError::BadMagic { .. } => Some(0),
            PhfError::Reserved { .. } => Some(16),
            PhfError::EmptyShape { .. } => Some(4),
            PhfError::TruncatedPayload { offset, .. } => Some(offset),
            PhfError::TrailingBytes { offset, .. } => Some(offset),
            PhfError::NonFinite { offset, .. } => Some(offset),
            PhfError::Io(_) => None,
        }
    }
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

pub fn encode(m: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.data().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    out.extend_from_slice(&m.layer_id().to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Header fields without the payload: `(rows, cols, layer_id)`.
pub fn decode_header(bytes: &[u8]) -> Result<(usize, usize, u32), PhfError> {
    if bytes.len() < HEADER_LEN {
        return Err(PhfError::TruncatedHeader { len: bytes.len() });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().expect("4-byte slice");
    if magic != MAGIC {
        return Err(PhfError::BadMagic { found: magic });
    }
    let rows = read_u32(bytes, 4);
    let cols = read_u32(bytes, 8);
    let layer_id = read_u32(bytes, 12);
    let reserved = read_u32(bytes, 16);
    if reserved != 0 {
        return Err(PhfError::Reserved { value: reserved });
    }
    if rows == 0 || cols == 0 {
        return Err(PhfError::EmptyShape { rows, cols });
    }
    Ok((rows as usize, cols as usize, layer_id))
}

pub fn decode(bytes: &[u8]) -> Result<FeatureMatrix, PhfError> {
    let (rows, cols, layer_id) = decode_header(bytes)?;
    let expected = HEADER_LEN + 4 * rows * cols;
    if bytes.len() < expected {
        return Err(PhfError::TruncatedPayload { offset: bytes.len(), expected });
    }
    if bytes.len() > expected {
        return Err(PhfError::TrailingBytes { offset: expected, extra: bytes.len() - expected });
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4-byte chunk"));
        if !v.is_finite() {
            return Err(PhfError::NonFinite {
                row: i / cols,
                col: i % cols,
                offset: HEADER_LEN + 4 * i,
            });
        }
        data.push(v);
    }
    Ok(FeatureMatrix::from_parts_unchecked(layer_id, rows, cols, data))
}

pub fn read_phf(path: &Path) -> Result<FeatureMatrix, PhfError> {
    decode(&fs::read(path)?)
}

pub fn write_phf(path: &Path, m: &FeatureMatrix) -> Result<(), PhfError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(m))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> FeatureMatrix {
        FeatureMatrix::new(3, 2, 3, vec![1.0, -2.5, 0.0, 1e-30, 3.25e7, -0.0]).unwrap()
    }

    #[test]
    fn header_layout_is_fixed() {
        let bytes = encode(&sample());
        assert_eq!(&bytes[0..4], b"PHF1");
        assert_eq!(&bytes[4..8], &[2, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[3, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[3, 0, 0, 0]);
        assert_eq!(&bytes[16..20], &[0, 0, 0, 0]);
        assert_eq!(&bytes[20..24], &1.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 20 + 6 * 4);
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode(&sample());
        match decode(&bytes[..30]) {
            Err(PhfError::TruncatedPayload { offset, expected }) => {
                assert_eq!(offset, 30);
                assert_eq!(expected, 44);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(decode(&bytes[..10]), Err(PhfError::TruncatedHeader { len: 10 })));
    }

    #[test]
    fn rejects_bad_magic_and_nonfinite() {
        let mut bytes = encode(&sample());
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(PhfError::BadMagic { .. })));
        let mut bytes = encode(&sample());
        bytes[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
        match decode(&bytes) {
            Err(e @ PhfError::NonFinite { row: 0, col: 1, .. }) => assert_eq!(e.byte_offset(), Some(24)),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            rows in 1usize..6,
            cols in 1usize..6,
            layer in 0u32..100,
            seed in proptest::collection::vec(any::<u32>(), 36),
        ) {
            let data: Vec<f32> = seed[..rows * cols]
                .iter()
                .map(|&bits| {
                    let v = f32::from_bits(bits);
                    if v.is_finite() { v } else { 0.5 }
                })
                .collect();
            let m = FeatureMatrix::new(layer, rows, cols, data).unwrap();
            let back = decode(&encode(&m)).unwrap();
            prop_assert_eq!(back.layer_id(), layer);
            let a: Vec<u32> = m.data().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = back.data().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}
