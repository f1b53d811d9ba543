//! Dataset manifest: a UTF-8 JSON array of video records with paths relative
//! to the manifest's directory, plus the synthesis sidecar (`oracle.json`)
//! carrying the generated set's reference score.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use bispace_core::data::{DataError, Dataset, FeatureSequence};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::peye::{self, PeyeError};

#[derive(Debug, Serialize, Deserialize, Clone)]
pub struct VideoRecord {
    pub video_id: String,
    pub feature_path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audio_path: Option<String>,
    pub video_label: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame_label_path: Option<String>,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("manifest `{path}` is not valid JSON: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("video `{video_id}`: {source}")]
    Feature {
        video_id: String,
        #[source]
        source: PeyeError,
    },
    #[error("video `{video_id}`: frame label file holds non-binary values")]
    BadLabels { video_id: String },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Write `manifest.json` (pretty, trailing newline, deterministic order).
pub fn save(path: &Path, records: &[VideoRecord]) -> Result<(), ManifestError> {
    let mut body = serde_json::to_string_pretty(records).expect("serializable records");
    body.push('\n');
    fs::write(path, body).map_err(|source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_records(path: &Path) -> Result<Vec<VideoRecord>, ManifestError> {
    let body = fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&body).map_err(|source| ManifestError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Load and validate the full dataset a manifest points at.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset, ManifestError> {
    let records = load_records(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut videos = Vec::with_capacity(records.len());
    for record in &records {
        let visual = peye::read_file(&base.join(&record.feature_path)).map_err(|source| {
            ManifestError::Feature {
                video_id: record.video_id.clone(),
                source,
            }
        })?;
        let audio = record
            .audio_path
            .as_ref()
            .map(|p| peye::read_file(&base.join(p)))
            .transpose()
            .map_err(|source| ManifestError::Feature {
                video_id: record.video_id.clone(),
                source,
            })?;
        let frame_labels = record
            .frame_label_path
            .as_ref()
            .map(|p| -> Result<Vec<u8>, ManifestError> {
                let rows = peye::read_file(&base.join(p)).map_err(|source| {
                    ManifestError::Feature {
                        video_id: record.video_id.clone(),
                        source,
                    }
                })?;
                peye::rows_to_labels(&rows).ok_or_else(|| ManifestError::BadLabels {
                    video_id: record.video_id.clone(),
                })
            })
            .transpose()?;
        videos.push(FeatureSequence {
            video_id: record.video_id.clone(),
            visual,
            audio,
            frame_labels,
            video_label: record.video_label,
        });
    }
    Ok(Dataset::new(videos)?)
}

/// Reference information written next to a synthesized dataset.
#[derive(Debug, Serialize, Deserialize, Clone)]
pub struct OracleInfo {
    /// Frame-level AP of the nearest-centroid rule on the raw features.
    pub nearest_centroid_ap: f64,
    pub seed: u64,
    pub ambiguous_ids: Vec<String>,
}

pub fn save_oracle(path: &Path, info: &OracleInfo) -> Result<(), ManifestError> {
    let mut body = serde_json::to_string_pretty(info).expect("serializable oracle info");
    body.push('\n');
    fs::write(path, body).map_err(|source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_oracle(path: &Path) -> Result<OracleInfo, ManifestError> {
    let body = fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&body).map_err(|source| ManifestError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Standard on-disk layout for a synthesized dataset directory.
pub struct DatasetLayout {
    pub root: PathBuf,
}

impl DatasetLayout {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
        }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn bank(&self) -> PathBuf {
        self.root.join("bank.ptxb")
    }

    pub fn oracle(&self) -> PathBuf {
        self.root.join("oracle.json")
    }

    pub fn features_dir(&self) -> PathBuf {
        self.root.join("features")
    }

    pub fn audio_dir(&self) -> PathBuf {
        self.root.join("audio")
    }

    pub fn labels_dir(&self) -> PathBuf {
        self.root.join("labels")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_json_round_trip() {
        let records = vec![
            VideoRecord {
                video_id: "v0".into(),
                feature_path: "features/v0.peye".into(),
                audio_path: Some("audio/v0.peye".into()),
                video_label: 1,
                frame_label_path: Some("labels/v0.peye".into()),
            },
            VideoRecord {
                video_id: "v1".into(),
                feature_path: "features/v1.peye".into(),
                audio_path: None,
                video_label: 0,
                frame_label_path: None,
            },
        ];
        let json = serde_json::to_string(&records).unwrap();
        assert!(!json.contains("audio_path\":null"));
        let back: Vec<VideoRecord> = serde_json::from_str(&json).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].video_id, "v0");
        assert!(back[1].audio_path.is_none());
    }
}
