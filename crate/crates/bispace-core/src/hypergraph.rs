//! Energy-driven dynamic message passing on the hyperboloid.
//!
//! The semantic branch transforms node features with the manifold-preserving
//! linear layer, measures their dispersion with the hyperbolic Dirichlet
//! energy, derives a layer-sensitive association threshold from it, prunes the
//! similarity graph with that threshold and aggregates the survivors as a
//! Lorentz centroid. Early layers see a relaxed threshold (global context),
//! deeper layers a stricter one (local context).
//!
//! The pruning comparison runs on the raw pairwise similarities, which share
//! the `(0, 1)` scale of the sigmoid threshold; the surviving row-softmax
//! weights are kept verbatim (no renormalization — centroid aggregation
//! renormalizes onto the manifold regardless). A node whose row is entirely
//! pruned keeps its own feature.
//!
//! The temporal branch is the same transform-and-aggregate step over a fixed
//! `exp(-|i-j|/eta)` kernel, without pruning.

use alloc::vec::Vec;

use crate::geometry::{
    self, euclid_to_lorentz, geodesic_distance, hyperbolic_linear, lift_to_manifold, Curvature,
    GeometryError, HyperbolicLinearParams, LorentzPoint,
};
use crate::linalg;
use crate::scalar::Scalar;

/// Thresholding hyperparameters for the layer-sensitive association degree.
#[derive(Clone, Copy, Debug)]
pub struct LshadConfig {
    pub beta: f64,
    pub gamma: f64,
}

impl Default for LshadConfig {
    fn default() -> Self {
        Self {
            beta: 0.8,
            gamma: 1.2,
        }
    }
}

/// Temporal kernel width; defaults to Euler's number.
#[derive(Clone, Copy, Debug)]
pub struct TemporalConfig {
    pub eta: f64,
}

impl Default for TemporalConfig {
    fn default() -> Self {
        Self {
            eta: core::f64::consts::E,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphKind {
    Semantic,
    Temporal,
}

/// A `T x T` nonnegative weight matrix driving one aggregation step.
#[derive(Clone, Debug)]
pub struct MessageGraph<S> {
    pub weights: Vec<Vec<S>>,
    pub kind: GraphKind,
}

impl<S: Scalar> MessageGraph<S> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_square(&self) -> bool {
        let n = self.weights.len();
        self.weights.iter().all(|row| row.len() == n)
    }
}

/// Hyperbolic Dirichlet energy: half the sum of squared pairwise geodesic
/// distances over all ordered pairs (the diagonal contributes zero).
pub fn dirichlet_energy<S: Scalar>(nodes: &[LorentzPoint<S>]) -> Result<S, GeometryError> {
    assert!(!nodes.is_empty(), "dirichlet_energy: no nodes");
    let zero = nodes[0].coords()[0].lit(0.0);
    let mut acc = zero;
    // Each unordered pair appears twice in the ordered sum; the half cancels.
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            let d = geodesic_distance(&nodes[i], &nodes[j])?;
            acc = acc + d.clone() * d;
        }
    }
    Ok(acc)
}

/// Layer-sensitive association threshold
/// `sigmoid(beta * k - gamma + 1/(energy + 1))`, nondecreasing in the layer
/// index `k >= 1` and nonincreasing in the energy.
pub fn lshad_threshold<S: Scalar>(energy: &S, layer_index: usize, cfg: &LshadConfig) -> S {
    assert!(layer_index >= 1, "layer indices are 1-based");
    let shifted = energy.clone() + 1.0;
    let inv = shifted.lit(1.0) / shifted;
    (inv + (cfg.beta * layer_index as f64 - cfg.gamma)).sigmoid()
}

/// Pairwise Lorentzian similarities `exp(-d_L)`; symmetric, diagonal ~ 1.
pub fn lorentz_similarity_matrix<S: Scalar>(
    nodes: &[LorentzPoint<S>],
) -> Result<MessageGraph<S>, GeometryError> {
    let n = nodes.len();
    let mut rows: Vec<Vec<S>> = (0..n).map(|_| Vec::with_capacity(n)).collect();
    for i in 0..n {
        for j in 0..n {
            if j < i {
                let mirrored = rows[j][i].clone();
                rows[i].push(mirrored);
            } else {
                rows[i].push(geometry::lorentz_similarity(&nodes[i], &nodes[j])?);
            }
        }
    }
    Ok(MessageGraph {
        weights: rows,
        kind: GraphKind::Semantic,
    })
}

/// Row-softmax of the pairwise similarities; each row sums to one.
pub fn semantic_adjacency<S: Scalar>(
    nodes: &[LorentzPoint<S>],
) -> Result<MessageGraph<S>, GeometryError> {
    let sims = lorentz_similarity_matrix(nodes)?;
    Ok(row_softmax(&sims))
}

fn row_softmax<S: Scalar>(g: &MessageGraph<S>) -> MessageGraph<S> {
    MessageGraph {
        weights: g.weights.iter().map(|row| linalg::softmax(row)).collect(),
        kind: g.kind,
    }
}

/// Zero out entries strictly below `threshold`; survivors are kept verbatim.
/// Idempotent for a fixed threshold.
pub fn apply_lshad_rule<S: Scalar>(g: &MessageGraph<S>, threshold: f64) -> MessageGraph<S> {
    let weights = g
        .weights
        .iter()
        .map(|row| {
            row.iter()
                .map(|w| if w.val() < threshold { w.lit(0.0) } else { w.clone() })
                .collect()
        })
        .collect();
    MessageGraph {
        weights,
        kind: g.kind,
    }
}

/// Temporal kernel `exp(-|i-j|/eta)`: symmetric, unit diagonal. `like`
/// supplies the evaluation context for the constant entries.
pub fn temporal_adjacency<S: Scalar>(
    len: usize,
    cfg: &TemporalConfig,
    like: &S,
) -> MessageGraph<S> {
    assert!(cfg.eta > 0.0, "temporal kernel width must be positive");
    assert!(len >= 1, "temporal_adjacency: empty sequence");
    let weights = (0..len)
        .map(|i| {
            (0..len)
                .map(|j| {
                    let gap = if i >= j { i - j } else { j - i };
                    like.lit(crate::math::exp(-(gap as f64) / cfg.eta))
                })
                .collect()
        })
        .collect();
    MessageGraph {
        weights,
        kind: GraphKind::Temporal,
    }
}

/// Lorentz-centroid aggregation: each output is the weighted sum of its
/// neighbors renormalized by `sqrt(-K) * |sum|_L`, which lands back on the
/// manifold. A row of all-zero weights keeps the node's own feature.
///
/// Exact-zero weights are structural zeros (pruned edges): the corresponding
/// neighbor is skipped entirely and no gradient flows through that entry.
pub fn message_aggregate<S: Scalar>(
    graph: &MessageGraph<S>,
    nodes: &[LorentzPoint<S>],
) -> Result<Vec<LorentzPoint<S>>, GeometryError> {
    let n = nodes.len();
    if graph.weights.len() != n || !graph.is_square() {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            got: graph.weights.len(),
        });
    }
    assert!(n >= 1, "message_aggregate: no nodes");
    let curv = nodes[0].curvature();
    let ambient = nodes[0].ambient_dim();
    for node in nodes {
        if node.ambient_dim() != ambient {
            return Err(GeometryError::DimensionMismatch {
                expected: ambient,
                got: node.ambient_dim(),
            });
        }
        if node.curvature() != curv {
            return Err(GeometryError::CurvatureMismatch {
                left: curv.k(),
                right: node.curvature().k(),
            });
        }
    }

    let a = curv.sqrt_neg();
    let mut out = Vec::with_capacity(n);
    for (i, row) in graph.weights.iter().enumerate() {
        if row.iter().all(|w| w.val() == 0.0) {
            out.push(nodes[i].clone());
            continue;
        }
        let mut sum: Option<Vec<S>> = None;
        for (j, w) in row.iter().enumerate() {
            if w.val() == 0.0 {
                continue;
            }
            match &mut sum {
                None => {
                    sum = Some(
                        nodes[j]
                            .coords()
                            .iter()
                            .map(|c| c.clone() * w.clone())
                            .collect(),
                    );
                }
                Some(acc) => {
                    for (s, c) in acc.iter_mut().zip(nodes[j].coords()) {
                        *s = s.clone() + c.clone() * w.clone();
                    }
                }
            }
        }
        let sum = sum.expect("nonzero row has at least one contribution");
        let denom = geometry::lorentz_norm(&sum) * a;
        let coords = sum.into_iter().map(|c| c / denom.clone()).collect();
        out.push(LorentzPoint::new_unchecked(coords, curv));
    }
    Ok(out)
}

/// One semantic layer: transform, measure energy, derive the layer threshold,
/// prune the similarity graph and aggregate.
pub fn hegcn_layer<S: Scalar>(
    nodes: &[LorentzPoint<S>],
    layer_index: usize,
    params: &HyperbolicLinearParams<S>,
    cfg: &LshadConfig,
) -> Result<Vec<LorentzPoint<S>>, GeometryError> {
    let transformed: Vec<LorentzPoint<S>> = nodes
        .iter()
        .map(|x| hyperbolic_linear(x, params))
        .collect::<Result<_, _>>()?;
    let energy = dirichlet_energy(&transformed)?;
    let threshold = lshad_threshold(&energy, layer_index, cfg).val();
    let sims = lorentz_similarity_matrix(&transformed)?;
    let adjacency = row_softmax(&sims);
    // Pruning decisions compare raw similarities against the threshold (both
    // live in (0,1)); surviving softmax weights pass through unchanged.
    let masked = MessageGraph {
        weights: adjacency
            .weights
            .iter()
            .zip(&sims.weights)
            .map(|(arow, srow)| {
                arow.iter()
                    .zip(srow)
                    .map(|(aw, sw)| {
                        if sw.val() < threshold {
                            aw.lit(0.0)
                        } else {
                            aw.clone()
                        }
                    })
                    .collect()
            })
            .collect(),
        kind: GraphKind::Semantic,
    };
    message_aggregate(&masked, &transformed)
}

/// One temporal layer: transform then aggregate over the fixed kernel.
pub fn temporal_hgcn_layer<S: Scalar>(
    nodes: &[LorentzPoint<S>],
    params: &HyperbolicLinearParams<S>,
    cfg: &TemporalConfig,
) -> Result<Vec<LorentzPoint<S>>, GeometryError> {
    let transformed: Vec<LorentzPoint<S>> = nodes
        .iter()
        .map(|x| hyperbolic_linear(x, params))
        .collect::<Result<_, _>>()?;
    let like = transformed[0].coords()[0].clone();
    let graph = temporal_adjacency(transformed.len(), cfg, &like);
    message_aggregate(&graph, &transformed)
}

/// Full hyperbolic branch: lift the feature rows, run the stacked semantic and
/// temporal layers in parallel, and re-lift the concatenated spatial parts
/// into a single manifold representation per node.
///
/// With zero layers both stacks pass the lifted input through, so the output
/// is the lifted input with its spatial part duplicated.
pub fn hyper_branch_forward<S: Scalar>(
    features: &[Vec<S>],
    semantic_layers: &[HyperbolicLinearParams<S>],
    temporal_layers: &[HyperbolicLinearParams<S>],
    lshad: &LshadConfig,
    temporal: &TemporalConfig,
    curv: Curvature,
) -> Result<Vec<LorentzPoint<S>>, GeometryError> {
    assert!(!features.is_empty(), "hyper branch: empty sequence");
    let lifted: Vec<LorentzPoint<S>> = features
        .iter()
        .map(|row| euclid_to_lorentz(row, curv))
        .collect();

    let mut semantic = lifted.clone();
    for (l, p) in semantic_layers.iter().enumerate() {
        semantic = hegcn_layer(&semantic, l + 1, p, lshad)?;
    }
    let mut temporal_nodes = lifted;
    for p in temporal_layers {
        temporal_nodes = temporal_hgcn_layer(&temporal_nodes, p, temporal)?;
    }

    Ok(semantic
        .iter()
        .zip(&temporal_nodes)
        .map(|(s, t)| {
            let mut spatial = s.spatial().to_vec();
            spatial.extend(t.spatial().iter().cloned());
            lift_to_manifold(&spatial, curv)
        })
        .collect())
}
