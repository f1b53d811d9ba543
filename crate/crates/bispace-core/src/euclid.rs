//! Flat-space mirror of the hyperbolic branch: graph convolutions over a
//! cosine-similarity graph (recomputed per layer) and the shared temporal
//! kernel. No pruning is applied in Euclidean space.

use alloc::vec::Vec;

use crate::geometry::GeometryError;
use crate::hypergraph::{temporal_adjacency, GraphKind, MessageGraph, TemporalConfig};
use crate::linalg;
use crate::scalar::Scalar;

/// Row-softmax of pairwise cosine similarities. Zero-norm rows contribute
/// similarity 0 against every node (and vice versa).
pub fn euclid_semantic_adjacency<S: Scalar>(rows: &[Vec<S>]) -> MessageGraph<S> {
    assert!(!rows.is_empty(), "adjacency over empty sequence");
    assert!(
        rows.iter().all(|r| r.len() == rows[0].len() && !r.is_empty()),
        "adjacency rows must share a nonzero width"
    );
    let norms: Vec<Option<S>> = rows
        .iter()
        .map(|r| {
            let sq: f64 = r.iter().map(|v| v.val() * v.val()).sum();
            (sq > 0.0).then(|| linalg::euclidean_norm(r))
        })
        .collect();
    let n = rows.len();
    let mut sims: Vec<Vec<S>> = (0..n).map(|_| Vec::with_capacity(n)).collect();
    for i in 0..n {
        for j in 0..n {
            if j < i {
                let mirrored = sims[j][i].clone();
                sims[i].push(mirrored);
                continue;
            }
            let s = match (&norms[i], &norms[j]) {
                (Some(ni), Some(nj)) => {
                    linalg::dot(&rows[i], &rows[j]) / (ni.clone() * nj.clone())
                }
                _ => rows[i][0].lit(0.0),
            };
            sims[i].push(s);
        }
    }
    MessageGraph {
        weights: sims.iter().map(|row| linalg::softmax(row)).collect(),
        kind: GraphKind::Semantic,
    }
}

/// Plain graph convolution `relu(A X W + b)` with a residual connection
/// whenever input and output widths match.
pub fn gcn_layer<S: Scalar>(
    rows: &[Vec<S>],
    graph: &MessageGraph<S>,
    w: &[Vec<S>],
    b: &[S],
) -> Result<Vec<Vec<S>>, GeometryError> {
    let t = rows.len();
    if graph.weights.len() != t || !graph.is_square() {
        return Err(GeometryError::DimensionMismatch {
            expected: t,
            got: graph.weights.len(),
        });
    }
    let in_dim = rows[0].len();
    let out_dim = w.len();
    if w.is_empty() || w[0].len() != in_dim {
        return Err(GeometryError::DimensionMismatch {
            expected: in_dim,
            got: w.first().map_or(0, Vec::len),
        });
    }
    if b.len() != out_dim {
        return Err(GeometryError::DimensionMismatch {
            expected: out_dim,
            got: b.len(),
        });
    }

    let mut out = Vec::with_capacity(t);
    for (i, weights) in graph.weights.iter().enumerate() {
        // aggregated_i = sum_j A_ij x_j
        let mut agg: Vec<S> = rows[0].iter().map(|v| v.clone() * weights[0].clone()).collect();
        for j in 1..t {
            if weights[j].val() == 0.0 {
                continue;
            }
            for (a, v) in agg.iter_mut().zip(&rows[j]) {
                *a = a.clone() + v.clone() * weights[j].clone();
            }
        }
        let pre = linalg::add(&linalg::matvec(w, &agg), b);
        let mut activated: Vec<S> = pre.iter().map(Scalar::relu).collect();
        if in_dim == out_dim {
            activated = linalg::add(&activated, &rows[i]);
        }
        out.push(activated);
    }
    Ok(out)
}

/// Per-layer weights for one sub-branch.
pub struct GcnLayerParams<S> {
    pub w: Vec<Vec<S>>,
    pub b: Vec<S>,
}

/// Euclidean branch: stacked layers over the (recomputed) similarity graph in
/// parallel with stacked layers over the temporal kernel, concatenated per
/// node. Zero layers duplicate the input.
pub fn euclid_branch_forward<S: Scalar>(
    rows: &[Vec<S>],
    semantic_layers: &[GcnLayerParams<S>],
    temporal_layers: &[GcnLayerParams<S>],
    temporal: &TemporalConfig,
) -> Result<Vec<Vec<S>>, GeometryError> {
    assert!(!rows.is_empty(), "euclid branch: empty sequence");

    let mut sem: Vec<Vec<S>> = rows.to_vec();
    for layer in semantic_layers {
        let graph = euclid_semantic_adjacency(&sem);
        sem = gcn_layer(&sem, &graph, &layer.w, &layer.b)?;
    }

    let like = rows[0][0].clone();
    let temporal_graph = temporal_adjacency(rows.len(), temporal, &like);
    let mut tmp: Vec<Vec<S>> = rows.to_vec();
    for layer in temporal_layers {
        tmp = gcn_layer(&tmp, &temporal_graph, &layer.w, &layer.b)?;
    }

    Ok(sem
        .into_iter()
        .zip(tmp)
        .map(|(mut s, t)| {
            s.extend(t);
            s
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{DetRng, Stream};
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn identical_rows_give_uniform_adjacency() {
        let rows = vec![vec![1.0, 2.0]; 4];
        let g = euclid_semantic_adjacency(&rows);
        for row in &g.weights {
            for w in row {
                assert!(close(*w, 0.25, 1e-12));
            }
        }
    }

    #[test]
    fn single_row_adjacency_is_one() {
        let g = euclid_semantic_adjacency(&[vec![0.3, -0.1]]);
        assert_eq!(g.weights, vec![vec![1.0]]);
    }

    #[test]
    fn orthogonal_pair_softmax() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let g = euclid_semantic_adjacency(&rows);
        // cosine sims per row: (1, 0) -> softmax = (0.731, 0.269)
        assert!(close(g.weights[0][0], 0.7310585786300049, 1e-9));
        assert!(close(g.weights[0][1], 0.2689414213699951, 1e-9));
    }

    #[test]
    fn zero_norm_row_gets_zero_similarity() {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]];
        let g = euclid_semantic_adjacency(&rows);
        // Row 0 similarities are all zero -> uniform softmax.
        for w in &g.weights[0] {
            assert!(close(*w, 1.0 / 3.0, 1e-12));
        }
        // Other rows see sim 0 against the zero row but 1 among themselves.
        assert!(g.weights[1][0] < g.weights[1][2]);
    }

    #[test]
    fn gcn_identity_doubles_nonnegative_input() {
        let rows = vec![vec![1.0, 2.0], vec![0.5, 0.25]];
        let eye = MessageGraph {
            weights: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            kind: GraphKind::Semantic,
        };
        let w = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let b = vec![0.0, 0.0];
        let out = gcn_layer(&rows, &eye, &w, &b).unwrap();
        assert_eq!(out, vec![vec![2.0, 4.0], vec![1.0, 0.5]]);
    }

    #[test]
    fn gcn_zero_weights_is_pure_residual() {
        let rows = vec![vec![1.0, -2.0], vec![0.3, 0.4]];
        let g = euclid_semantic_adjacency(&rows);
        let w = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        let b = vec![0.0, 0.0];
        let out = gcn_layer(&rows, &g, &w, &b).unwrap();
        assert_eq!(out, rows);
    }

    #[test]
    fn branch_zero_layers_duplicates_input() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let out =
            euclid_branch_forward(&rows, &[], &[], &TemporalConfig::default()).unwrap();
        assert_eq!(out[0], vec![1.0, 2.0, 1.0, 2.0]);
        assert_eq!(out[1], vec![3.0, 4.0, 3.0, 4.0]);
    }

    #[test]
    fn branch_preserves_length_and_is_finite() {
        let mut rng = DetRng::new(61, Stream::Synth);
        let rows: Vec<Vec<f64>> = (0..7).map(|_| rng.normal_vec(5)).collect();
        let scale = 1.0 / (5f64).sqrt();
        let mk = |rng: &mut DetRng, out: usize, inp: usize| GcnLayerParams {
            w: (0..out)
                .map(|_| rng.normal_vec(inp).iter().map(|v| v * scale).collect())
                .collect(),
            b: vec![0.0; out],
        };
        let sem = vec![mk(&mut rng, 3, 5), mk(&mut rng, 3, 3)];
        let tmp = vec![mk(&mut rng, 3, 5), mk(&mut rng, 3, 3)];
        let out = euclid_branch_forward(&rows, &sem, &tmp, &TemporalConfig::default()).unwrap();
        assert_eq!(out.len(), 7);
        for row in &out {
            assert_eq!(row.len(), 6);
            assert!(row.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn branch_is_permutation_equivariant_under_joint_permutation() {
        // Semantic adjacency is feature-driven, so permuting rows permutes the
        // semantic path outputs; with zero temporal layers the whole branch is
        // equivariant.
        let mut rng = DetRng::new(67, Stream::Synth);
        let rows: Vec<Vec<f64>> = (0..5).map(|_| rng.normal_vec(4)).collect();
        let scale = 0.5;
        let sem = vec![GcnLayerParams {
            w: (0..4)
                .map(|_| rng.normal_vec(4).iter().map(|v| v * scale).collect())
                .collect(),
            b: vec![0.1; 4],
        }];
        let base = euclid_branch_forward(&rows, &sem, &[], &TemporalConfig::default()).unwrap();
        let perm = [4usize, 2, 0, 3, 1];
        let prows: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
        let permuted =
            euclid_branch_forward(&prows, &sem, &[], &TemporalConfig::default()).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            for (a, b) in permuted[k].iter().zip(&base[i]) {
                assert!(close(*a, *b, 1e-12));
            }
        }
    }
}
