//! Cross-space attention between the Euclidean branch output and the
//! hyperbolic branch output (presented in tangent coordinates at the origin).
//!
//! Attention scores are Lorentzian similarities between manifold lifts of the
//! query/key projections; scores at or below the `lambda` threshold are
//! removed, the survivors are row-softmaxed with `1/sqrt(d)` scaling and mixed
//! into the value projections. Rows with no surviving key contribute a zero
//! vector, so the interaction degrades to a pure residual when nothing is
//! related enough — in particular `lambda = 1` disables it entirely.
//!
//! `double_softmax` switches to the variant that normalizes the thresholded
//! scores first and then softmaxes the normalized weights again under the
//! `1/sqrt(d)` scaling; kept for fidelity experiments, off by default.

use alloc::vec::Vec;

use crate::geometry::{euclid_to_lorentz, lorentz_similarity, Curvature, GeometryError};
use crate::linalg;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct DsiConfig {
    /// Similarity threshold eliminating weak relations, in `[0, 1)` normally;
    /// `1` degenerates to pure residuals.
    pub lambda_thresh: f64,
    /// Scaling factor on the cross-space contribution.
    pub alpha: f64,
    /// Dimension of the query/key projections.
    pub head_dim: usize,
    pub double_softmax: bool,
}

impl Default for DsiConfig {
    fn default() -> Self {
        Self {
            lambda_thresh: 0.8,
            alpha: 0.4,
            head_dim: 8,
            double_softmax: false,
        }
    }
}

/// Query/key/value projections for one attention direction. Queries come from
/// the target space, keys and values from the source space.
#[derive(Clone, Debug)]
pub struct CrossAttentionParams<S> {
    pub wq: Vec<Vec<S>>,
    pub bq: Vec<S>,
    pub wk: Vec<Vec<S>>,
    pub bk: Vec<S>,
    pub wv: Vec<Vec<S>>,
    pub bv: Vec<S>,
}

/// Thresholded Lorentz-similarity attention from `source` into `target`
/// positions. Output rows have the value-projection width.
pub fn cross_space_attention<S: Scalar>(
    target: &[Vec<S>],
    source: &[Vec<S>],
    params: &CrossAttentionParams<S>,
    cfg: &DsiConfig,
    curv: Curvature,
) -> Result<Vec<Vec<S>>, GeometryError> {
    if target.len() != source.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: target.len(),
            got: source.len(),
        });
    }
    assert!(!target.is_empty(), "attention over empty sequence");
    assert_eq!(params.wq.len(), cfg.head_dim, "query projection rows");
    assert_eq!(params.wk.len(), cfg.head_dim, "key projection rows");

    let queries: Vec<_> = target
        .iter()
        .map(|row| {
            let q = linalg::add(&linalg::matvec(&params.wq, row), &params.bq);
            euclid_to_lorentz(&q, curv)
        })
        .collect();
    let keys: Vec<_> = source
        .iter()
        .map(|row| {
            let k = linalg::add(&linalg::matvec(&params.wk, row), &params.bk);
            euclid_to_lorentz(&k, curv)
        })
        .collect();
    let values: Vec<Vec<S>> = source
        .iter()
        .map(|row| linalg::add(&linalg::matvec(&params.wv, row), &params.bv))
        .collect();

    let scale = 1.0 / crate::math::sqrt(cfg.head_dim as f64);
    let out_dim = values[0].len();
    let mut out = Vec::with_capacity(target.len());
    for q in &queries {
        let mut scores = Vec::with_capacity(keys.len());
        let mut keep = Vec::with_capacity(keys.len());
        for k in &keys {
            let s = lorentz_similarity(q, k)?;
            keep.push(s.val() > cfg.lambda_thresh);
            scores.push(s);
        }
        if keep.iter().all(|&k| !k) {
            out.push((0..out_dim).map(|_| scores[0].lit(0.0)).collect());
            continue;
        }
        let weights = if cfg.double_softmax {
            let normalized = linalg::masked_softmax(&scores, &keep);
            let scaled: Vec<S> = normalized.iter().map(|w| w.clone() * scale).collect();
            linalg::softmax(&scaled)
        } else {
            let scaled: Vec<S> = scores.iter().map(|s| s.clone() * scale).collect();
            linalg::masked_softmax(&scaled, &keep)
        };
        let mut row: Option<Vec<S>> = None;
        for (w, v) in weights.iter().zip(&values) {
            if w.val() == 0.0 {
                continue;
            }
            match &mut row {
                None => row = Some(v.iter().map(|c| c.clone() * w.clone()).collect()),
                Some(acc) => {
                    for (a, c) in acc.iter_mut().zip(v) {
                        *a = a.clone() + c.clone() * w.clone();
                    }
                }
            }
        }
        out.push(row.expect("surviving keys exist"));
    }
    Ok(out)
}

/// Both interaction directions plus the final elementwise-max fusion:
///
/// ```text
/// E' = alpha * CSA(E <- H) + E
/// H' = alpha * CSA(H <- E') + H
/// F  = max(E', H')   (elementwise, per node)
/// ```
///
/// `hyper_tangent` must already be the tangent-at-origin coordinates of the
/// hyperbolic branch output, with the same width as `euclid`.
pub fn dsi_fuse<S: Scalar>(
    euclid: &[Vec<S>],
    hyper_tangent: &[Vec<S>],
    into_euclid: &CrossAttentionParams<S>,
    into_hyper: &CrossAttentionParams<S>,
    cfg: &DsiConfig,
    curv: Curvature,
) -> Result<Vec<Vec<S>>, GeometryError> {
    if euclid.len() != hyper_tangent.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: euclid.len(),
            got: hyper_tangent.len(),
        });
    }
    let csa_e = cross_space_attention(euclid, hyper_tangent, into_euclid, cfg, curv)?;
    let enhanced_e: Vec<Vec<S>> = euclid
        .iter()
        .zip(&csa_e)
        .map(|(e, c)| linalg::add(&linalg::scale(c, cfg.alpha), e))
        .collect();

    let csa_h = cross_space_attention(hyper_tangent, &enhanced_e, into_hyper, cfg, curv)?;
    let enhanced_h: Vec<Vec<S>> = hyper_tangent
        .iter()
        .zip(&csa_h)
        .map(|(h, c)| linalg::add(&linalg::scale(c, cfg.alpha), h))
        .collect();

    enhanced_e
        .iter()
        .zip(&enhanced_h)
        .map(|(e, h)| {
            if e.len() != h.len() {
                return Err(GeometryError::DimensionMismatch {
                    expected: e.len(),
                    got: h.len(),
                });
            }
            Ok(e.iter().zip(h).map(|(a, b)| a.max(b)).collect())
        })
        .collect()
}
