//! The PTXB text-embedding bank: per-video positive and ambiguous-negative
//! embeddings with role tags.
//!
//! Layout: magic `PTXB` | version `u32 = 1` | dim `u32` | count `u32` |
//! `count` entries of: id length `u32` | id (UTF-8) | role `u8`
//! (0 = positive, 1 = scene-modified, 2 = action-modified) | `dim` `f32`.
//!
//! Entries are stored grouped per video id (sorted), positive first; every
//! video id must carry exactly one positive entry.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use bispace_core::data::{NegativeText, TextBank, TextEntry, TextRole};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"PTXB";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BankError {
    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("bad magic at byte 0: expected `PTXB`, found {found:02x?}")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported version {got} (expected {VERSION})")]
    BadVersion { got: u32 },
    #[error("truncated bank: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("entry {index}: id is not valid UTF-8")]
    BadId { index: usize },
    #[error("entry {index}: unknown role tag {role}")]
    BadRole { index: usize, role: u8 },
    #[error("non-finite embedding value at byte offset {offset}")]
    NonFinite { offset: usize },
    #[error("video `{video_id}` has {count} positive entries (expected exactly 1)")]
    PositiveCount { video_id: String, count: usize },
    #[error("zero embedding dimension")]
    ZeroDim,
}

fn role_tag(role: TextRole) -> u8 {
    match role {
        TextRole::SceneModified => 1,
        TextRole::ActionModified => 2,
    }
}

pub fn to_bytes(bank: &TextBank) -> Result<Vec<u8>, BankError> {
    if bank.dim == 0 {
        return Err(BankError::ZeroDim);
    }
    let count: usize = bank
        .entries
        .values()
        .map(|e| 1 + e.negatives.len())
        .sum();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(bank.dim as u32).to_le_bytes());
    out.extend_from_slice(&(count as u32).to_le_bytes());
    let mut push_entry = |id: &str, role: u8, embedding: &[f64]| -> Result<(), BankError> {
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        out.push(role);
        for &v in embedding {
            if !v.is_finite() {
                return Err(BankError::NonFinite { offset: out.len() });
            }
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        Ok(())
    };
    for (id, entry) in &bank.entries {
        push_entry(id, 0, &entry.positive)?;
        for neg in &entry.negatives {
            push_entry(id, role_tag(neg.role), &neg.embedding)?;
        }
    }
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<TextBank, BankError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(BankError::BadMagic {
            found: bytes.get(..4).unwrap_or(bytes).to_vec(),
        });
    }
    let mut cursor = Cursor {
        bytes,
        offset: 4,
    };
    let version = cursor.u32()?;
    if version != VERSION {
        return Err(BankError::BadVersion { got: version });
    }
    let dim = cursor.u32()? as usize;
    if dim == 0 {
        return Err(BankError::ZeroDim);
    }
    let count = cursor.u32()? as usize;

    struct Partial {
        positives: Vec<Vec<f64>>,
        negatives: Vec<NegativeText>,
    }
    let mut partials: BTreeMap<String, Partial> = BTreeMap::new();

    for index in 0..count {
        let id_len = cursor.u32()? as usize;
        let id_bytes = cursor.take(id_len)?;
        let id = std::str::from_utf8(id_bytes)
            .map_err(|_| BankError::BadId { index })?
            .to_string();
        let role = cursor.take(1)?[0];
        let mut embedding = Vec::with_capacity(dim);
        for _ in 0..dim {
            let at = cursor.offset;
            let v = f32::from_le_bytes(cursor.take(4)?.try_into().unwrap());
            if !v.is_finite() {
                return Err(BankError::NonFinite { offset: at });
            }
            embedding.push(f64::from(v));
        }
        let partial = partials.entry(id).or_insert_with(|| Partial {
            positives: Vec::new(),
            negatives: Vec::new(),
        });
        match role {
            0 => partial.positives.push(embedding),
            1 => partial.negatives.push(NegativeText {
                embedding,
                role: TextRole::SceneModified,
            }),
            2 => partial.negatives.push(NegativeText {
                embedding,
                role: TextRole::ActionModified,
            }),
            other => return Err(BankError::BadRole { index, role: other }),
        }
    }

    let mut entries = BTreeMap::new();
    for (id, partial) in partials {
        if partial.positives.len() != 1 {
            return Err(BankError::PositiveCount {
                video_id: id,
                count: partial.positives.len(),
            });
        }
        let mut positives = partial.positives;
        entries.insert(
            id,
            TextEntry {
                positive: positives.pop().expect("checked length"),
                negatives: partial.negatives,
            },
        );
    }
    Ok(TextBank { dim, entries })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], BankError> {
        if self.offset + n > self.bytes.len() {
            return Err(BankError::Truncated {
                offset: self.offset,
                needed: self.offset + n - self.bytes.len(),
            });
        }
        let slice = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, BankError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn write_file(path: &Path, bank: &TextBank) -> Result<(), BankError> {
    let bytes = to_bytes(bank)?;
    fs::write(path, bytes).map_err(|source| BankError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_file(path: &Path) -> Result<TextBank, BankError> {
    let bytes = fs::read(path).map_err(|source| BankError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_bank() -> TextBank {
        let mut entries = BTreeMap::new();
        entries.insert(
            "vid_a".to_string(),
            TextEntry {
                positive: vec![0.5, -1.25],
                negatives: vec![
                    NegativeText {
                        embedding: vec![1.5, 2.5],
                        role: TextRole::SceneModified,
                    },
                    NegativeText {
                        embedding: vec![-0.75, 0.0],
                        role: TextRole::ActionModified,
                    },
                ],
            },
        );
        entries.insert(
            "vid_b".to_string(),
            TextEntry {
                positive: vec![2.0, 3.0],
                negatives: vec![],
            },
        );
        TextBank { dim: 2, entries }
    }

    #[test]
    fn round_trip_preserves_everything() {
        let bank = sample_bank();
        let bytes = to_bytes(&bank).unwrap();
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(back.dim, 2);
        assert_eq!(back.entries.len(), 2);
        let a = &back.entries["vid_a"];
        assert_eq!(a.positive, vec![0.5, -1.25]);
        assert_eq!(a.negatives.len(), 2);
        assert_eq!(a.negatives[0].role, TextRole::SceneModified);
        assert_eq!(a.negatives[1].role, TextRole::ActionModified);
        // empty negatives stay valid
        assert!(back.entries["vid_b"].negatives.is_empty());
        // bytes are reproducible
        assert_eq!(bytes, to_bytes(&back).unwrap());
    }

    #[test]
    fn duplicate_positive_rejected() {
        let bank = sample_bank();
        let mut bytes = to_bytes(&bank).unwrap();
        // Flip vid_a's first negative role byte (offset: find it) to 0 to
        // produce two positives.
        // Entry layout: 4 (id len) + 5 (id) + 1 (role) + 8 (embedding)
        let first_role = 16 + 4 + 5;
        assert_eq!(bytes[first_role], 0);
        let second_role = first_role + 1 + 8 + 4 + 5;
        assert_eq!(bytes[second_role], 1);
        bytes[second_role] = 0;
        assert!(matches!(
            from_bytes(&bytes),
            Err(BankError::PositiveCount { count: 2, .. })
        ));
    }

    #[test]
    fn truncation_reported_with_offset() {
        let bytes = to_bytes(&sample_bank()).unwrap();
        let cut = &bytes[..bytes.len() - 2];
        assert!(matches!(from_bytes(cut), Err(BankError::Truncated { .. })));
    }

    #[test]
    fn unknown_role_rejected() {
        let bank = sample_bank();
        let mut bytes = to_bytes(&bank).unwrap();
        let first_role = 16 + 4 + 5;
        bytes[first_role] = 7;
        assert!(matches!(
            from_bytes(&bytes),
            Err(BankError::BadRole { role: 7, .. })
        ));
    }
}
