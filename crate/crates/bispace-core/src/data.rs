//! In-memory dataset types shared by the synthetic generator, the file
//! formats and the training pipeline.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Number of frames covered by one snippet-level feature row.
pub const SNIPPET_FRAMES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum DataError {
    EmptySequence(String),
    InconsistentWidth { video_id: String, expected: usize, got: usize },
    AudioLengthMismatch { video_id: String, visual: usize, audio: usize },
    FrameLabelLength { video_id: String, expected: usize, got: usize },
    NonFiniteValue { video_id: String },
    InvalidLabel { video_id: String },
    EmptyDataset,
    TextDimMismatch { expected: usize, got: usize },
    UnknownVideo { video_id: String },
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::EmptySequence(id) => write!(f, "video `{id}` has no snippets"),
            DataError::InconsistentWidth { video_id, expected, got } => {
                write!(f, "video `{video_id}`: row width {got}, expected {expected}")
            }
            DataError::AudioLengthMismatch { video_id, visual, audio } => write!(
                f,
                "video `{video_id}`: audio length {audio} does not match visual length {visual}"
            ),
            DataError::FrameLabelLength { video_id, expected, got } => write!(
                f,
                "video `{video_id}`: {got} frame labels, expected {expected} (16 per snippet)"
            ),
            DataError::NonFiniteValue { video_id } => {
                write!(f, "video `{video_id}` contains non-finite values")
            }
            DataError::InvalidLabel { video_id } => {
                write!(f, "video `{video_id}` has labels outside {{0,1}}")
            }
            DataError::EmptyDataset => write!(f, "dataset contains no videos"),
            DataError::TextDimMismatch { expected, got } => {
                write!(f, "text embedding dimension {got}, expected {expected}")
            }
            DataError::UnknownVideo { video_id } => {
                write!(f, "text bank references unknown video `{video_id}`")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DataError {}

/// One video's per-snippet features with modality metadata and labels.
#[derive(Debug, Clone)]
pub struct FeatureSequence {
    pub video_id: String,
    /// `T x d_V`.
    pub visual: Vec<Vec<f64>>,
    /// `T x d_A`, absent for unimodal videos.
    pub audio: Option<Vec<Vec<f64>>>,
    /// Per-frame labels, `16 * T` entries when present.
    pub frame_labels: Option<Vec<u8>>,
    pub video_label: u8,
}

impl FeatureSequence {
    pub fn snippet_count(&self) -> usize {
        self.visual.len()
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let id = &self.video_id;
        if self.visual.is_empty() {
            return Err(DataError::EmptySequence(id.clone()));
        }
        let width = self.visual[0].len();
        if width == 0 {
            return Err(DataError::InconsistentWidth {
                video_id: id.clone(),
                expected: 1,
                got: 0,
            });
        }
        for row in &self.visual {
            if row.len() != width {
                return Err(DataError::InconsistentWidth {
                    video_id: id.clone(),
                    expected: width,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(DataError::NonFiniteValue { video_id: id.clone() });
            }
        }
        if let Some(audio) = &self.audio {
            if audio.len() != self.visual.len() {
                return Err(DataError::AudioLengthMismatch {
                    video_id: id.clone(),
                    visual: self.visual.len(),
                    audio: audio.len(),
                });
            }
            let a_width = audio.first().map_or(0, Vec::len);
            for row in audio {
                if row.len() != a_width || a_width == 0 {
                    return Err(DataError::InconsistentWidth {
                        video_id: id.clone(),
                        expected: a_width.max(1),
                        got: row.len(),
                    });
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(DataError::NonFiniteValue { video_id: id.clone() });
                }
            }
        }
        if let Some(labels) = &self.frame_labels {
            let expected = SNIPPET_FRAMES * self.visual.len();
            if labels.len() != expected {
                return Err(DataError::FrameLabelLength {
                    video_id: id.clone(),
                    expected,
                    got: labels.len(),
                });
            }
            if labels.iter().any(|&l| l > 1) {
                return Err(DataError::InvalidLabel { video_id: id.clone() });
            }
        }
        if self.video_label > 1 {
            return Err(DataError::InvalidLabel { video_id: id.clone() });
        }
        Ok(())
    }
}

/// A validated collection of feature sequences with consistent widths.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub videos: Vec<FeatureSequence>,
}

impl Dataset {
    pub fn new(videos: Vec<FeatureSequence>) -> Result<Self, DataError> {
        if videos.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        for v in &videos {
            v.validate()?;
        }
        let visual_dim = videos[0].visual[0].len();
        let mut audio_dim = 0;
        for v in &videos {
            if v.visual[0].len() != visual_dim {
                return Err(DataError::InconsistentWidth {
                    video_id: v.video_id.clone(),
                    expected: visual_dim,
                    got: v.visual[0].len(),
                });
            }
            if let Some(a) = &v.audio {
                let w = a[0].len();
                if audio_dim == 0 {
                    audio_dim = w;
                } else if w != audio_dim {
                    return Err(DataError::InconsistentWidth {
                        video_id: v.video_id.clone(),
                        expected: audio_dim,
                        got: w,
                    });
                }
            }
        }
        Ok(Self { videos })
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn visual_dim(&self) -> usize {
        self.videos[0].visual[0].len()
    }

    /// Audio width, 0 when no video carries audio.
    pub fn audio_dim(&self) -> usize {
        self.videos
            .iter()
            .find_map(|v| v.audio.as_ref().map(|a| a[0].len()))
            .unwrap_or(0)
    }

    pub fn has_frame_labels(&self) -> bool {
        self.videos.iter().all(|v| v.frame_labels.is_some())
    }
}

/// Role of a negative (ambiguous) text: which aspect of the event the
/// description modified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextRole {
    SceneModified,
    ActionModified,
}

#[derive(Debug, Clone)]
pub struct NegativeText {
    pub embedding: Vec<f64>,
    pub role: TextRole,
}

/// Per-video positive embedding plus ambiguous negatives.
#[derive(Debug, Clone)]
pub struct TextEntry {
    pub positive: Vec<f64>,
    pub negatives: Vec<NegativeText>,
}

/// Per-video text embeddings, keyed by video id.
#[derive(Debug, Clone, Default)]
pub struct TextBank {
    pub dim: usize,
    pub entries: BTreeMap<String, TextEntry>,
}

impl TextBank {
    pub fn validate(&self) -> Result<(), DataError> {
        for entry in self.entries.values() {
            if entry.positive.len() != self.dim {
                return Err(DataError::TextDimMismatch {
                    expected: self.dim,
                    got: entry.positive.len(),
                });
            }
            for neg in &entry.negatives {
                if neg.embedding.len() != self.dim {
                    return Err(DataError::TextDimMismatch {
                        expected: self.dim,
                        got: neg.embedding.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Every bank entry must reference a dataset video.
    pub fn cross_reference(&self, dataset: &Dataset) -> Result<(), DataError> {
        for id in self.entries.keys() {
            if !dataset.videos.iter().any(|v| &v.video_id == id) {
                return Err(DataError::UnknownVideo {
                    video_id: id.clone(),
                });
            }
        }
        Ok(())
    }
}
