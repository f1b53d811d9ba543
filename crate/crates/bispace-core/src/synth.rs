//! Deterministic synthetic datasets.
//!
//! Violent videos carry a contiguous positive segment drawn from the violent
//! cluster; normal videos draw from the normal cluster; a configurable share
//! of normal videos is "ambiguous" — drawn right next to the violent cluster
//! but displaced along a secondary axis, so a nearest-centroid rule confuses
//! them with violence while a richer decision function can still separate
//! them. Text embeddings live in the same space: positives near the video's
//! own cluster center, negatives anchored at the opposing class with varying
//! hardness.
//!
//! Everything is a pure function of the spec; the same seed reproduces the
//! same dataset bit for bit.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{
    DataError, Dataset, FeatureSequence, NegativeText, TextBank, TextEntry, TextRole,
    SNIPPET_FRAMES,
};
use crate::metrics::{average_precision, broadcast_to_frames};
use crate::rng::{DetRng, Stream};

/// How far the ambiguous cluster sits from the violent one, as a fraction of
/// the class margin, along the secondary axis.
const AMBIGUOUS_OFFSET_RATIO: f64 = 0.45;
/// Standard deviation of text embeddings around their anchors, as a fraction
/// of the margin.
const TEXT_NOISE_RATIO: f64 = 0.05;
/// Audio activation of violent snippets along the first audio axis.
const AUDIO_SIGNAL: f64 = 0.6;
const AUDIO_NOISE: f64 = 0.3;

#[derive(Clone, Debug)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub num_videos: usize,
    pub t_min: usize,
    pub t_max: usize,
    pub visual_dim: usize,
    /// 0 disables the audio modality.
    pub audio_dim: usize,
    /// Distance between the normal and violent cluster centers.
    pub margin: f64,
    /// Share of normal videos drawn near the violent cluster.
    pub ambiguity_fraction: f64,
    /// Per-coordinate feature noise.
    pub feature_noise: f64,
    /// Ambiguous texts per video.
    pub negatives_per_video: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            num_videos: 60,
            t_min: 16,
            t_max: 64,
            visual_dim: 16,
            audio_dim: 8,
            margin: 1.0,
            ambiguity_fraction: 0.3,
            feature_noise: 0.12,
            negatives_per_video: 2,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.num_videos < 2
            || self.t_min < 1
            || self.t_min > self.t_max
            || self.visual_dim < 2
            || !(self.margin > 0.0)
            || !(0.0..=1.0).contains(&self.ambiguity_fraction)
            || !(self.feature_noise >= 0.0)
        {
            return Err(DataError::EmptyDataset);
        }
        Ok(())
    }

    /// Tiny two-video fixture used by the full-model gradient check.
    pub fn gradcheck_fixture() -> Self {
        Self {
            seed: 7,
            num_videos: 2,
            t_min: 8,
            t_max: 8,
            visual_dim: 6,
            audio_dim: 4,
            margin: 1.0,
            ambiguity_fraction: 1.0,
            feature_noise: 0.12,
            negatives_per_video: 2,
        }
    }
}

pub struct SynthOutput {
    pub dataset: Dataset,
    pub bank: TextBank,
    /// Frame-level AP of the nearest-centroid rule on the raw features,
    /// the run's reference score.
    pub oracle_ap: f64,
    pub ambiguous_ids: Vec<String>,
}

fn axis(dim: usize, index: usize, scale: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[index] = scale;
    v
}

fn add_noise(rng: &mut DetRng, center: &[f64], noise: f64) -> Vec<f64> {
    center.iter().map(|&c| c + noise * rng.normal()).collect()
}

/// Generate a dataset plus text bank; see the module docs for the layout.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SynthOutput, DataError> {
    spec.validate()?;
    let mut rng = DetRng::new(spec.seed, Stream::Synth);
    let d = spec.visual_dim;

    let normal_center = vec![0.0; d];
    let violent_center = axis(d, 0, spec.margin);
    let mut ambiguous_center = axis(d, 0, spec.margin);
    ambiguous_center[1] = AMBIGUOUS_OFFSET_RATIO * spec.margin;

    let num_violent = spec.num_videos / 2;
    let num_normal = spec.num_videos - num_violent;
    let num_ambiguous =
        ((num_normal as f64) * spec.ambiguity_fraction + 0.5) as usize;

    let text_noise = TEXT_NOISE_RATIO * spec.margin;
    let mut videos = Vec::with_capacity(spec.num_videos);
    let mut entries = BTreeMap::new();
    let mut ambiguous_ids = Vec::new();

    for v in 0..spec.num_videos {
        let violent = v < num_violent;
        let ambiguous = !violent && (v - num_violent) < num_ambiguous;
        let video_id = if violent {
            format!("violent_{v:03}")
        } else if ambiguous {
            format!("ambig_{v:03}")
        } else {
            format!("normal_{v:03}")
        };
        if ambiguous {
            ambiguous_ids.push(video_id.clone());
        }

        let t = rng.int_in(spec.t_min, spec.t_max);
        let (seg_start, seg_len) = if violent {
            let len = rng.int_in((t / 4).max(1), (t / 2).max(1));
            let start = rng.int_in(0, t - len);
            (start, len)
        } else {
            (0, 0)
        };

        let snippet_center = |i: usize| -> &[f64] {
            if violent && i >= seg_start && i < seg_start + seg_len {
                &violent_center
            } else if ambiguous {
                &ambiguous_center
            } else {
                &normal_center
            }
        };

        let mut visual = Vec::with_capacity(t);
        let mut frame_labels = Vec::with_capacity(t * SNIPPET_FRAMES);
        for i in 0..t {
            visual.push(add_noise(&mut rng, snippet_center(i), spec.feature_noise));
            let label = u8::from(violent && i >= seg_start && i < seg_start + seg_len);
            for _ in 0..SNIPPET_FRAMES {
                frame_labels.push(label);
            }
        }

        let audio = (spec.audio_dim > 0).then(|| {
            (0..t)
                .map(|i| {
                    let hot = violent && i >= seg_start && i < seg_start + seg_len;
                    let center = axis(spec.audio_dim, 0, if hot { AUDIO_SIGNAL } else { 0.0 });
                    add_noise(&mut rng, &center, AUDIO_NOISE)
                })
                .collect()
        });

        // Text entry: positive near the video's own event center, negatives
        // anchored at the opposing class with hardness varying by index.
        let positive_anchor: &[f64] = if violent {
            &violent_center
        } else if ambiguous {
            &ambiguous_center
        } else {
            &normal_center
        };
        let positive = add_noise(&mut rng, positive_anchor, text_noise);
        let negatives = (0..spec.negatives_per_video)
            .map(|j| {
                let f = if spec.negatives_per_video > 1 {
                    j as f64 / (spec.negatives_per_video - 1) as f64
                } else {
                    0.0
                };
                // For violent videos the hardest negative is the ambiguous
                // (visually similar but normal) description; for normal
                // videos the negatives drift from the violent description
                // toward the ambiguous one.
                let anchor: Vec<f64> = if violent {
                    ambiguous_center
                        .iter()
                        .zip(&normal_center)
                        .map(|(&a, &n)| a * (1.0 - f) + n * f)
                        .collect()
                } else {
                    violent_center
                        .iter()
                        .zip(&ambiguous_center)
                        .map(|(&v0, &a)| v0 * (1.0 - f) + a * f)
                        .collect()
                };
                NegativeText {
                    embedding: add_noise(&mut rng, &anchor, text_noise),
                    role: if j % 2 == 0 {
                        TextRole::ActionModified
                    } else {
                        TextRole::SceneModified
                    },
                }
            })
            .collect();
        entries.insert(video_id.clone(), TextEntry { positive, negatives });

        videos.push(FeatureSequence {
            video_id,
            visual,
            audio,
            frame_labels: Some(frame_labels),
            video_label: u8::from(violent),
        });
    }

    let dataset = Dataset::new(videos)?;
    let bank = TextBank {
        dim: d,
        entries,
    };
    bank.validate()?;
    let oracle_ap = nearest_centroid_ap(&dataset, &normal_center, &violent_center);

    Ok(SynthOutput {
        dataset,
        bank,
        oracle_ap,
        ambiguous_ids,
    })
}

/// Frame-level AP of scoring each snippet by its margin between the two class
/// centroids (the brute-force reference a trained model has to beat).
pub fn nearest_centroid_ap(
    dataset: &Dataset,
    normal_center: &[f64],
    violent_center: &[f64],
) -> f64 {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for video in &dataset.videos {
        let snippet_scores: Vec<f64> = video
            .visual
            .iter()
            .map(|row| euclid_dist(row, normal_center) - euclid_dist(row, violent_center))
            .collect();
        scores.extend(broadcast_to_frames(&snippet_scores));
        labels.extend_from_slice(video.frame_labels.as_ref().expect("synthetic labels"));
    }
    average_precision(&scores, &labels)
}

fn euclid_dist(a: &[f64], b: &[f64]) -> f64 {
    crate::math::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}
