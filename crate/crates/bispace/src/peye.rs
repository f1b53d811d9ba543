//! The PEYE feature file: a dense little-endian `rows x cols` matrix of
//! `f32`, promoted to `f64` in memory.
//!
//! Layout: magic `PEYE` (4 bytes) | version `u32 = 1` | rows `u32` | cols
//! `u32` | `rows * cols` `f32`, row-major. Frame-label files reuse the format
//! with `cols = 1` and values in `{0.0, 1.0}`.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"PEYE";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum PeyeError {
    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("bad magic at byte 0: expected `PEYE`, found {found:02x?}")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported version {got} at byte 4 (expected {VERSION})")]
    BadVersion { got: u32 },
    #[error("zero rows in header at byte 8")]
    ZeroRows,
    #[error("zero cols in header at byte 12")]
    ZeroCols,
    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("non-finite value at byte offset {offset}")]
    NonFinite { offset: usize },
    #[error("row {row} has {got} values, expected {cols}")]
    RaggedRows { row: usize, got: usize, cols: usize },
}

/// Serialize a matrix to PEYE bytes.
pub fn to_bytes(rows: &[Vec<f64>]) -> Result<Vec<u8>, PeyeError> {
    if rows.is_empty() {
        return Err(PeyeError::ZeroRows);
    }
    let cols = rows[0].len();
    if cols == 0 {
        return Err(PeyeError::ZeroCols);
    }
    let mut out = Vec::with_capacity(HEADER_LEN + rows.len() * cols * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(PeyeError::RaggedRows {
                row: i,
                got: row.len(),
                cols,
            });
        }
        for &v in row {
            if !v.is_finite() {
                return Err(PeyeError::NonFinite { offset: out.len() });
            }
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

/// Parse PEYE bytes into `f64` rows, validating the header and rejecting
/// non-finite payloads.
pub fn from_bytes(bytes: &[u8]) -> Result<Vec<Vec<f64>>, PeyeError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(PeyeError::BadMagic {
            found: bytes.get(..4).unwrap_or(bytes).to_vec(),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(PeyeError::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(PeyeError::BadVersion { got: version });
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if rows == 0 {
        return Err(PeyeError::ZeroRows);
    }
    if cols == 0 {
        return Err(PeyeError::ZeroCols);
    }
    let expected = HEADER_LEN + rows * cols * 4;
    if bytes.len() != expected {
        return Err(PeyeError::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    let mut out = Vec::with_capacity(rows);
    let mut offset = HEADER_LEN;
    for _ in 0..rows {
        let mut row = Vec::with_capacity(cols);
        for _ in 0..cols {
            let v = f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
            if !v.is_finite() {
                return Err(PeyeError::NonFinite { offset });
            }
            row.push(f64::from(v));
            offset += 4;
        }
        out.push(row);
    }
    Ok(out)
}

pub fn write_file(path: &Path, rows: &[Vec<f64>]) -> Result<(), PeyeError> {
    let bytes = to_bytes(rows)?;
    fs::write(path, bytes).map_err(|source| PeyeError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_file(path: &Path) -> Result<Vec<Vec<f64>>, PeyeError> {
    let bytes = fs::read(path).map_err(|source| PeyeError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_bytes(&bytes)
}

/// Frame labels ride in a single-column PEYE file.
pub fn labels_to_rows(labels: &[u8]) -> Vec<Vec<f64>> {
    labels.iter().map(|&l| vec![f64::from(l)]).collect()
}

pub fn rows_to_labels(rows: &[Vec<f64>]) -> Option<Vec<u8>> {
    rows.iter()
        .map(|r| match r.as_slice() {
            [v] if *v == 0.0 => Some(0u8),
            [v] if *v == 1.0 => Some(1u8),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let rows = vec![
            vec![1.5, -2.25, 0.125],
            vec![3.5, 0.0, -8.75],
        ];
        let bytes = to_bytes(&rows).unwrap();
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(rows, back);
        // serialize again: identical bytes
        assert_eq!(bytes, to_bytes(&back).unwrap());
    }

    #[test]
    fn truncated_file_reports_lengths() {
        let rows = vec![vec![1.0, 2.0]];
        let mut bytes = to_bytes(&rows).unwrap();
        bytes.truncate(bytes.len() - 3);
        match from_bytes(&bytes) {
            Err(PeyeError::Truncated { expected, actual }) => {
                assert_eq!(expected, 24);
                assert_eq!(actual, 21);
            }
            other => panic!("expected Truncated, got {other:?}"),
        }
    }

    #[test]
    fn zero_rows_header_rejected() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&VERSION.to_le_bytes());
        bytes.extend_from_slice(&0u32.to_le_bytes());
        bytes.extend_from_slice(&4u32.to_le_bytes());
        assert!(matches!(from_bytes(&bytes), Err(PeyeError::ZeroRows)));
    }

    #[test]
    fn bad_magic_rejected() {
        let bytes = b"NOPE\x01\x00\x00\x00".to_vec();
        assert!(matches!(from_bytes(&bytes), Err(PeyeError::BadMagic { .. })));
    }

    #[test]
    fn nan_payload_rejected_with_offset() {
        let rows = vec![vec![1.0, 2.0]];
        let mut bytes = to_bytes(&rows).unwrap();
        bytes[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
        match from_bytes(&bytes) {
            Err(PeyeError::NonFinite { offset }) => assert_eq!(offset, 16),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn label_round_trip() {
        let labels = vec![0u8, 1, 1, 0];
        let rows = labels_to_rows(&labels);
        assert_eq!(rows_to_labels(&rows), Some(labels));
        assert_eq!(rows_to_labels(&[vec![0.5]]), None);
    }
}
