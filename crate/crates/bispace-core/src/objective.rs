//! Training objectives: the Lorentz-metric classifier, top-k bag scoring for
//! weak supervision, binary cross-entropy, and the text-guided contrastive
//! loss with distance-weighted negatives.

use alloc::vec::Vec;

use crate::geometry::{
    euclid_to_lorentz, geodesic_distance, geodesic_distance_mixed, lorentz_similarity_mixed,
    Curvature, GeometryError, LorentzPoint,
};
use crate::scalar::Scalar;

/// Clamp bound for predicted probabilities inside the cross-entropy.
pub const BCE_CLAMP: f64 = 1e-7;

/// Lorentz-metric classifier `sigmoid(eps + eps * <lift(x), w>_L + b)`.
#[derive(Clone, Debug)]
pub struct ClassifierParams<S> {
    /// Weight vector in the ambient dimension (feature width + 1).
    pub w: Vec<S>,
    pub b: S,
    /// Fixed scale hyperparameter.
    pub epsilon: f64,
}

/// Scores one fused feature row in `(0, 1)`. The row is lifted onto the
/// manifold before the Lorentz inner product.
pub fn classify<S: Scalar>(
    row: &[S],
    params: &ClassifierParams<S>,
    curv: Curvature,
) -> Result<S, GeometryError> {
    if params.w.len() != row.len() + 1 {
        return Err(GeometryError::DimensionMismatch {
            expected: row.len() + 1,
            got: params.w.len(),
        });
    }
    let lifted = euclid_to_lorentz(row, curv);
    let ip = crate::geometry::lorentz_inner(lifted.coords(), &params.w)?;
    Ok((ip * params.epsilon + params.b.clone() + params.epsilon).sigmoid())
}

/// `k = floor(T/16) + 1`, the bag size of the k-max video score.
pub fn mil_k(t: usize) -> usize {
    t / 16 + 1
}

/// Indices of the `k` largest values; ties broken by the lower index.
pub fn top_k_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .expect("scores must be comparable")
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

/// Mean of the `floor(T/16) + 1` largest snippet scores. Gradients flow only
/// into the selected snippets.
pub fn mil_video_score<S: Scalar>(snippet_scores: &[S]) -> S {
    assert!(!snippet_scores.is_empty(), "empty snippet sequence");
    let k = mil_k(snippet_scores.len());
    let vals: Vec<f64> = snippet_scores.iter().map(Scalar::val).collect();
    let picked = top_k_indices(&vals, k);
    let mut acc = snippet_scores[picked[0]].clone();
    for &i in &picked[1..] {
        acc = acc + snippet_scores[i].clone();
    }
    acc / picked.len() as f64
}

/// Mean binary cross-entropy with predictions clamped to
/// `[BCE_CLAMP, 1 - BCE_CLAMP]`.
pub fn bce_loss<S: Scalar>(predictions: &[S], labels: &[f64]) -> S {
    assert_eq!(predictions.len(), labels.len(), "bce: length mismatch");
    assert!(!predictions.is_empty(), "bce: empty batch");
    let mut acc: Option<S> = None;
    for (p, &y) in predictions.iter().zip(labels) {
        let clamped = p.clamp_stop(BCE_CLAMP, 1.0 - BCE_CLAMP);
        let one_minus = -(clamped.clone() - 1.0);
        let term = clamped.ln() * y + one_minus.ln() * (1.0 - y);
        acc = Some(match acc {
            Some(a) => a + term,
            None => term,
        });
    }
    -(acc.expect("nonempty")) / predictions.len() as f64
}

/// Weighting mode for contrastive negatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WeightingMode {
    /// `w = exp(-theta * d_L(t+, t-))`: smaller text distance (harder
    /// negative) gives a larger weight.
    #[default]
    Distance,
    /// `w = exp(-theta * Ls(t+, t-))`: the similarity-argument variant, kept
    /// switchable for fidelity comparisons.
    LiteralSimilarity,
}

/// Contrastive-loss hyperparameters.
#[derive(Clone, Debug)]
pub struct HvlglConfig {
    /// Softmax temperature.
    pub tau: f64,
    /// Negative-weight sharpness.
    pub theta: f64,
    /// Weight of the contrastive term inside the total loss.
    pub psi: f64,
    pub mode: WeightingMode,
}

impl Default for HvlglConfig {
    fn default() -> Self {
        Self {
            tau: 0.3,
            theta: 1.0,
            psi: 1e-4,
            mode: WeightingMode::Distance,
        }
    }
}

/// Dynamic weight of one negative text against the positive text.
pub fn negative_weight(
    positive: &LorentzPoint<f64>,
    negative: &LorentzPoint<f64>,
    theta: f64,
    mode: WeightingMode,
) -> Result<f64, GeometryError> {
    let d = geodesic_distance(positive, negative)?;
    let arg = match mode {
        WeightingMode::Distance => d,
        WeightingMode::LiteralSimilarity => (-d).exp(),
    };
    Ok((-theta * arg).exp())
}

/// Contrastive loss of one visual embedding against one positive and `N`
/// weighted negatives:
/// `-log( exp(S+/tau) / (exp(S+/tau) + sum_j exp(S-_j/tau)) )`.
///
/// With no negatives the loss is exactly zero.
pub fn hvlgl_video_loss<S: Scalar>(
    visual: &LorentzPoint<S>,
    positive: &LorentzPoint<f64>,
    negatives: &[LorentzPoint<f64>],
    cfg: &HvlglConfig,
) -> Result<S, GeometryError> {
    assert!(cfg.tau > 0.0, "temperature must be positive");
    if negatives.is_empty() {
        return Ok(visual.coords()[0].lit(0.0));
    }
    let s_pos = lorentz_similarity_mixed(visual, positive)? / cfg.tau;
    let mut denom = s_pos.clone().exp();
    for neg in negatives {
        let w = negative_weight(positive, neg, cfg.theta, cfg.mode)?;
        let s_neg = lorentz_similarity_mixed(visual, neg)? * w / cfg.tau;
        denom = denom + s_neg.exp();
    }
    Ok(denom.ln() - s_pos)
}

/// Mean similarity gap form used by tests to cross-check monotonicity.
pub fn hvlgl_positive_similarity<S: Scalar>(
    visual: &LorentzPoint<S>,
    positive: &LorentzPoint<f64>,
) -> Result<S, GeometryError> {
    lorentz_similarity_mixed(visual, positive)
}

/// Total objective `psi * L_contrastive + L_classification`.
pub fn total_loss<S: Scalar>(hvlgl: &S, bce: &S, psi: f64) -> S {
    hvlgl.clone() * psi + bce.clone()
}

/// Distance between a differentiable visual embedding and a constant text
/// embedding (exposed for instrumentation).
pub fn visual_text_distance<S: Scalar>(
    visual: &LorentzPoint<S>,
    text: &LorentzPoint<f64>,
) -> Result<S, GeometryError> {
    geodesic_distance_mixed(visual, text)
}
