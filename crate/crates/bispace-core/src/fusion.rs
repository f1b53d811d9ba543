//! Modality fusion: per-modality linear projections plus scaled-dot
//! cross-modal attention that enhances the audio stream, with the visual
//! projection providing the attention keys. Videos without an audio track
//! get a zero block of the audio projection width so every video fuses to the
//! same feature width.

use alloc::vec::Vec;

use crate::geometry::GeometryError;
use crate::linalg;
use crate::scalar::Scalar;

/// Projections for the audio path of the fusion stage. Queries come from the
/// projected audio, keys from the projected visual; the attended values are
/// the projected audio rows themselves.
#[derive(Clone, Debug)]
pub struct AudioFusionParams<S> {
    pub audio_w: Vec<Vec<S>>,
    pub audio_b: Vec<S>,
    pub query_w: Vec<Vec<S>>,
    pub query_b: Vec<S>,
    pub key_w: Vec<Vec<S>>,
    pub key_b: Vec<S>,
}

#[derive(Clone, Debug)]
pub struct FusionParams<S> {
    pub visual_w: Vec<Vec<S>>,
    pub visual_b: Vec<S>,
    /// Present iff the dataset carries an audio modality.
    pub audio: Option<AudioFusionParams<S>>,
}

impl<S: Scalar> FusionParams<S> {
    pub fn visual_width(&self) -> usize {
        self.visual_w.len()
    }

    pub fn audio_width(&self) -> usize {
        self.audio.as_ref().map_or(0, |a| a.audio_w.len())
    }

    /// Width of the fused rows.
    pub fn fused_width(&self) -> usize {
        self.visual_width() + self.audio_width()
    }
}

/// Fuse one video's features into `T x (p_V + p_A)` rows.
pub fn fuse_modalities<S: Scalar>(
    visual: &[Vec<f64>],
    audio: Option<&[Vec<f64>]>,
    params: &FusionParams<S>,
) -> Result<Vec<Vec<S>>, GeometryError> {
    assert!(!visual.is_empty(), "fusion over empty sequence");
    let t = visual.len();
    if params.visual_w[0].len() != visual[0].len() {
        return Err(GeometryError::DimensionMismatch {
            expected: params.visual_w[0].len(),
            got: visual[0].len(),
        });
    }

    let projected_visual: Vec<Vec<S>> = visual
        .iter()
        .map(|row| linalg::add(&linalg::matvec_mixed(&params.visual_w, row), &params.visual_b))
        .collect();

    let audio_block: Option<Vec<Vec<S>>> = match (audio, &params.audio) {
        (Some(rows), Some(ap)) => {
            if rows.len() != t {
                return Err(GeometryError::DimensionMismatch {
                    expected: t,
                    got: rows.len(),
                });
            }
            if ap.audio_w[0].len() != rows[0].len() {
                return Err(GeometryError::DimensionMismatch {
                    expected: ap.audio_w[0].len(),
                    got: rows[0].len(),
                });
            }
            let projected_audio: Vec<Vec<S>> = rows
                .iter()
                .map(|row| linalg::add(&linalg::matvec_mixed(&ap.audio_w, row), &ap.audio_b))
                .collect();
            let queries: Vec<Vec<S>> = projected_audio
                .iter()
                .map(|row| linalg::add(&linalg::matvec(&ap.query_w, row), &ap.query_b))
                .collect();
            let keys: Vec<Vec<S>> = projected_visual
                .iter()
                .map(|row| linalg::add(&linalg::matvec(&ap.key_w, row), &ap.key_b))
                .collect();
            let scale = 1.0 / crate::math::sqrt(ap.query_w.len() as f64);
            let enhanced: Vec<Vec<S>> = queries
                .iter()
                .map(|q| {
                    let logits: Vec<S> = keys
                        .iter()
                        .map(|k| linalg::dot(q, k) * scale)
                        .collect();
                    let attn = linalg::softmax(&logits);
                    let mut acc: Vec<S> = projected_audio[0]
                        .iter()
                        .map(|v| v.clone() * attn[0].clone())
                        .collect();
                    for j in 1..t {
                        for (a, v) in acc.iter_mut().zip(&projected_audio[j]) {
                            *a = a.clone() + v.clone() * attn[j].clone();
                        }
                    }
                    acc
                })
                .collect();
            Some(enhanced)
        }
        (None, Some(ap)) => {
            // Unimodal video in a multimodal model: zero block.
            let width = ap.audio_w.len();
            let zeros: Vec<Vec<S>> = projected_visual
                .iter()
                .map(|row| (0..width).map(|_| row[0].lit(0.0)).collect())
                .collect();
            Some(zeros)
        }
        (_, None) => None,
    };

    Ok(projected_visual
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            if let Some(block) = &audio_block {
                row.extend(block[i].iter().cloned());
            }
            row
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{gradcheck, DifferentiableLoss, DEFAULT_STEP, DEFAULT_TOLERANCE};
    use crate::params::{ParamSet, ParameterStore, Shape};
    use crate::rng::{DetRng, Stream};
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn identity_fusion(v_dim: usize, a_dim: usize) -> FusionParams<f64> {
        let eye = |n: usize| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect()
        };
        FusionParams {
            visual_w: eye(v_dim),
            visual_b: vec![0.0; v_dim],
            audio: Some(AudioFusionParams {
                audio_w: eye(a_dim),
                audio_b: vec![0.0; a_dim],
                query_w: eye(a_dim),
                query_b: vec![0.0; a_dim],
                key_w: vec![vec![0.0; v_dim]; a_dim],
                key_b: vec![0.0; a_dim],
            }),
        }
    }

    #[test]
    fn audio_absent_concatenates_zero_block() {
        let p = identity_fusion(3, 2);
        let fused = fuse_modalities(&[vec![1.0, 2.0, 3.0]], None, &p).unwrap();
        assert_eq!(fused, vec![vec![1.0, 2.0, 3.0, 0.0, 0.0]]);
    }

    #[test]
    fn single_snippet_attention_weight_is_one() {
        // T=1: the softmax over one key is 1, so the enhanced audio equals the
        // projected audio value.
        let p = identity_fusion(2, 2);
        let fused = fuse_modalities(
            &[vec![0.5, -0.5]],
            Some(&[vec![0.25, 0.75]]),
            &p,
        )
        .unwrap();
        assert_eq!(fused[0].len(), 4);
        assert!(close(fused[0][2], 0.25, 1e-12));
        assert!(close(fused[0][3], 0.75, 1e-12));
    }

    #[test]
    fn unimodal_model_has_no_audio_block() {
        let p = FusionParams {
            visual_w: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            visual_b: vec![0.5, -0.5],
            audio: None,
        };
        let fused = fuse_modalities(&[vec![1.0, 1.0]], None, &p).unwrap();
        assert_eq!(fused, vec![vec![1.5, 0.5]]);
    }

    struct FusionLoss {
        visual: Vec<Vec<f64>>,
        audio: Vec<Vec<f64>>,
    }

    impl DifferentiableLoss for FusionLoss {
        fn loss<S: Scalar>(&self, params: &ParamSet<S>) -> S {
            let p = FusionParams {
                visual_w: params.rows("vw").expect("vw"),
                visual_b: params.vec("vb").expect("vb").to_vec(),
                audio: Some(AudioFusionParams {
                    audio_w: params.rows("aw").expect("aw"),
                    audio_b: params.vec("ab").expect("ab").to_vec(),
                    query_w: params.rows("qw").expect("qw"),
                    query_b: params.vec("qb").expect("qb").to_vec(),
                    key_w: params.rows("kw").expect("kw"),
                    key_b: params.vec("kb").expect("kb").to_vec(),
                }),
            };
            let fused = fuse_modalities(&self.visual, Some(&self.audio), &p).expect("fuse");
            let mut acc = fused[0][0].clone() * fused[0][0].clone();
            for row in &fused {
                for v in row {
                    acc = acc + v.clone() * v.clone() * 0.5;
                }
            }
            acc
        }
    }

    #[test]
    fn fusion_gradients_match_central_differences() {
        let mut rng = DetRng::new(107, Stream::Synth);
        let loss = FusionLoss {
            visual: (0..3).map(|_| rng.normal_vec(3)).collect(),
            audio: (0..3).map(|_| rng.normal_vec(2)).collect(),
        };
        let mut store = ParameterStore::new();
        store.insert("vw", Shape::matrix(2, 3), rng.normal_vec(6));
        store.insert("vb", Shape::vector(2), rng.normal_vec(2));
        store.insert("aw", Shape::matrix(2, 2), rng.normal_vec(4));
        store.insert("ab", Shape::vector(2), rng.normal_vec(2));
        store.insert("qw", Shape::matrix(2, 2), rng.normal_vec(4));
        store.insert("qb", Shape::vector(2), rng.normal_vec(2));
        store.insert("kw", Shape::matrix(2, 2), rng.normal_vec(4));
        store.insert("kb", Shape::vector(2), rng.normal_vec(2));
        let report = gradcheck(&store, &loss, DEFAULT_STEP, DEFAULT_TOLERANCE).unwrap();
        assert!(report.passed(), "{report}");
    }
}
