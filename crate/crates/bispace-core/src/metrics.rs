//! Frame-level average precision and ROC-AUC.
//!
//! Conventions (pinned so results are exactly reproducible and match the
//! brute-force oracles): AP sweeps the distinct score values as thresholds
//! and accumulates `ΔRecall * Precision` (tied scores collapse into one sweep
//! point); AUC counts tied positive/negative pairs as 0.5 via average ranks.
//! Both are invariant to the ordering of the input.

use alloc::vec::Vec;

use crate::data::SNIPPET_FRAMES;

/// Average precision over binary labels. Returns 0 when there are no
/// positives.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> f64 {
    assert_eq!(scores.len(), labels.len(), "ap: length mismatch");
    let total_pos = labels.iter().filter(|&&l| l == 1).count();
    if total_pos == 0 {
        return 0.0;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let mut ap = 0.0;
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut recall_prev = 0.0;
    let mut i = 0;
    while i < idx.len() {
        // Advance over the whole tied group before emitting a sweep point.
        let threshold = scores[idx[i]];
        while i < idx.len() && scores[idx[i]] == threshold {
            if labels[idx[i]] == 1 {
                tp += 1;
            }
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / total_pos as f64;
        let precision = tp as f64 / seen as f64;
        ap += (recall - recall_prev) * precision;
        recall_prev = recall;
    }
    ap
}

/// ROC-AUC via the rank statistic with average ranks on ties. Returns 0.5
/// when either class is absent.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> f64 {
    assert_eq!(scores.len(), labels.len(), "auc: length mismatch");
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return 0.5;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // Average rank within tied groups (1-based ranks).
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let v = scores[idx[i]];
        let start = i;
        while i < idx.len() && scores[idx[i]] == v {
            i += 1;
        }
        let avg_rank = (start + 1 + i) as f64 / 2.0; // mean of ranks start+1..=i
        for &j in &idx[start..i] {
            if labels[j] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
    }
    let u = rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0;
    u / (pos as f64 * neg as f64)
}

/// Repeat each snippet score across its 16-frame window.
pub fn broadcast_to_frames(snippet_scores: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(snippet_scores.len() * SNIPPET_FRAMES);
    for &s in snippet_scores {
        for _ in 0..SNIPPET_FRAMES {
            out.push(s);
        }
    }
    out
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
    fn ap_hand_example() {
        // labels (1,0,1) scored (0.9, 0.8, 0.7): precision points 1 and 2/3.
        let ap = average_precision(&[0.9, 0.8, 0.7], &[1, 0, 1]);
        assert!(close(ap, (1.0 + 2.0 / 3.0) / 2.0, 1e-12));
    }

    #[test]
    fn auc_hand_example() {
        let auc = roc_auc(&[0.9, 0.8, 0.7], &[1, 0, 1]);
        assert!(close(auc, 0.5, 1e-12));
    }

    #[test]
    fn perfect_separation() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let labels = [1, 1, 0, 0];
        assert!(close(average_precision(&scores, &labels), 1.0, 1e-12));
        assert!(close(roc_auc(&scores, &labels), 1.0, 1e-12));
    }

    #[test]
    fn constant_scores_auc_half_ap_prevalence() {
        let scores = [0.4; 6];
        let labels = [1, 0, 0, 1, 0, 0];
        assert!(close(roc_auc(&scores, &labels), 0.5, 1e-12));
        assert!(close(average_precision(&scores, &labels), 2.0 / 6.0, 1e-12));
    }

    #[test]
    fn degenerate_labels() {
        assert_eq!(average_precision(&[0.1, 0.2], &[0, 0]), 0.0);
        assert_eq!(roc_auc(&[0.1, 0.2], &[0, 0]), 0.5);
        assert_eq!(roc_auc(&[0.1, 0.2], &[1, 1]), 0.5);
    }

    #[test]
    fn order_invariance() {
        let mut rng = DetRng::new(113, Stream::Synth);
        let scores: Vec<f64> = (0..40).map(|_| rng.uniform()).collect();
        let labels: Vec<u8> = (0..40).map(|_| u8::from(rng.uniform() > 0.6)).collect();
        let ap = average_precision(&scores, &labels);
        let auc = roc_auc(&scores, &labels);

        let perm: Vec<usize> = {
            let mut p: Vec<usize> = (0..40).collect();
            rng.shuffle(&mut p);
            p
        };
        let pscores: Vec<f64> = perm.iter().map(|&i| scores[i]).collect();
        let plabels: Vec<u8> = perm.iter().map(|&i| labels[i]).collect();
        assert!(close(average_precision(&pscores, &plabels), ap, 1e-12));
        assert!(close(roc_auc(&pscores, &plabels), auc, 1e-12));
    }

    /// Brute-force AP: explicit precision/recall sweep over every distinct
    /// threshold, recomputing confusion counts from scratch each time.
    fn ap_oracle(scores: &[f64], labels: &[u8]) -> f64 {
        let total_pos = labels.iter().filter(|&&l| l == 1).count();
        if total_pos == 0 {
            return 0.0;
        }
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();
        let mut ap = 0.0;
        let mut recall_prev = 0.0;
        for &t in &thresholds {
            let tp = scores
                .iter()
                .zip(labels)
                .filter(|&(&s, &l)| s >= t && l == 1)
                .count();
            let predicted = scores.iter().filter(|&&s| s >= t).count();
            let recall = tp as f64 / total_pos as f64;
            let precision = tp as f64 / predicted as f64;
            ap += (recall - recall_prev) * precision;
            recall_prev = recall;
        }
        ap
    }

    /// Brute-force AUC: all positive/negative pairs, ties at 0.5.
    fn auc_oracle(scores: &[f64], labels: &[u8]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, (&si, &li)) in scores.iter().zip(labels).enumerate() {
            if li != 1 {
                continue;
            }
            for (j, (&sj, &lj)) in scores.iter().zip(labels).enumerate() {
                if i == j || lj != 0 {
                    continue;
                }
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
        if pairs == 0.0 {
            return 0.5;
        }
        wins / pairs
    }

    #[test]
    fn matches_brute_force_oracles_with_ties() {
        let mut rng = DetRng::new(127, Stream::Synth);
        for round in 0..30 {
            let n = 5 + rng.int_in(0, 200);
            // Quantize some rounds to force ties.
            let quantize = round % 3 == 0;
            let scores: Vec<f64> = (0..n)
                .map(|_| {
                    let s = rng.uniform();
                    if quantize {
                        (s * 8.0).floor() / 8.0
                    } else {
                        s
                    }
                })
                .collect();
            let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.uniform() > 0.7)).collect();
            let ap = average_precision(&scores, &labels);
            let auc = roc_auc(&scores, &labels);
            assert_eq!(ap, ap_oracle(&scores, &labels), "AP mismatch round {round}");
            assert_eq!(auc, auc_oracle(&scores, &labels), "AUC mismatch round {round}");
        }
    }

    #[test]
    fn broadcast_expands_by_window() {
        let frames = broadcast_to_frames(&[0.25, 0.75]);
        assert_eq!(frames.len(), 32);
        assert!(frames[..16].iter().all(|&f| f == 0.25));
        assert!(frames[16..].iter().all(|&f| f == 0.75));
    }
}
