//! Minimal dense helpers over `Vec`-backed rows, generic over [`Scalar`].
//!
//! Feature matrices are represented as slices of row vectors (`&[Vec<S>]`);
//! weight matrices as row-major `Vec<Vec<S>>`. Mixed variants take plain `f64`
//! data on one side so that constant inputs never occupy tape slots.

use alloc::vec::Vec;

use crate::scalar::Scalar;

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    assert_eq!(a.len(), b.len(), "dot: length mismatch");
    assert!(!a.is_empty(), "dot: empty vectors");
    let mut acc = a[0].clone() * b[0].clone();
    for i in 1..a.len() {
        acc = acc + a[i].clone() * b[i].clone();
    }
    acc
}

pub fn dot_mixed<S: Scalar>(a: &[S], b: &[f64]) -> S {
    assert_eq!(a.len(), b.len(), "dot_mixed: length mismatch");
    assert!(!a.is_empty(), "dot_mixed: empty vectors");
    let mut acc = a[0].clone() * b[0];
    for i in 1..a.len() {
        acc = acc + a[i].clone() * b[i];
    }
    acc
}

/// `w · x` for a row-major weight matrix.
pub fn matvec<S: Scalar>(w: &[Vec<S>], x: &[S]) -> Vec<S> {
    w.iter().map(|row| dot(row, x)).collect()
}

/// `w · x` with constant input data.
pub fn matvec_mixed<S: Scalar>(w: &[Vec<S>], x: &[f64]) -> Vec<S> {
    w.iter().map(|row| dot_mixed(row, x)).collect()
}

pub fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    assert_eq!(a.len(), b.len(), "add: length mismatch");
    a.iter()
        .zip(b)
        .map(|(x, y)| x.clone() + y.clone())
        .collect()
}

pub fn scale<S: Scalar>(a: &[S], c: f64) -> Vec<S> {
    a.iter().map(|x| x.clone() * c).collect()
}

pub fn sum<S: Scalar>(xs: &[S]) -> S {
    assert!(!xs.is_empty(), "sum: empty slice");
    let mut acc = xs[0].clone();
    for x in &xs[1..] {
        acc = acc + x.clone();
    }
    acc
}

pub fn mean<S: Scalar>(xs: &[S]) -> S {
    sum(xs) / xs.len() as f64
}

/// Euclidean norm `sqrt(Σ x_i²)`. The caller is responsible for guarding the
/// zero vector when gradients matter (the derivative of `sqrt` blows up at 0).
pub fn euclidean_norm<S: Scalar>(x: &[S]) -> S {
    assert!(!x.is_empty(), "euclidean_norm: empty vector");
    let mut acc = x[0].clone() * x[0].clone();
    for v in &x[1..] {
        acc = acc + v.clone() * v.clone();
    }
    acc.sqrt()
}

/// Row softmax. Shifts by the (stop-gradient) max value; softmax is invariant
/// under constant shifts so the gradient is unaffected.
pub fn softmax<S: Scalar>(row: &[S]) -> Vec<S> {
    assert!(!row.is_empty(), "softmax: empty row");
    let m = row
        .iter()
        .map(Scalar::val)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<S> = row.iter().map(|x| (x.clone() - m).exp()).collect();
    let denom = sum(&exps);
    exps.into_iter().map(|e| e / denom.clone()).collect()
}

/// Softmax restricted to `keep[j] == true` entries; the rest are exact zeros.
/// Rows with nothing kept come back as all zeros.
pub fn masked_softmax<S: Scalar>(row: &[S], keep: &[bool]) -> Vec<S> {
    assert_eq!(row.len(), keep.len(), "masked_softmax: length mismatch");
    let kept: Vec<&S> = row
        .iter()
        .zip(keep)
        .filter_map(|(x, &k)| k.then_some(x))
        .collect();
    if kept.is_empty() {
        return row.iter().map(|x| x.lit(0.0)).collect();
    }
    let m = kept.iter().map(|x| x.val()).fold(f64::NEG_INFINITY, f64::max);
    let mut denom: Option<S> = None;
    let mut exps: Vec<Option<S>> = Vec::with_capacity(row.len());
    for (x, &k) in row.iter().zip(keep) {
        if k {
            let e = (x.clone() - m).exp();
            denom = Some(match denom {
                Some(d) => d + e.clone(),
                None => e.clone(),
            });
            exps.push(Some(e));
        } else {
            exps.push(None);
        }
    }
    let denom = denom.expect("kept entries exist");
    exps.into_iter()
        .zip(row)
        .map(|(e, x)| match e {
            Some(e) => e / denom.clone(),
            None => x.lit(0.0),
        })
        .collect()
}
