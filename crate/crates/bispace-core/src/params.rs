//! Named trainable tensors with gradient slots, plus the typed views used to
//! evaluate the model generically over [`Scalar`].

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::scalar::Scalar;
use crate::tape::{Tape, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub fn matrix(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub fn vector(len: usize) -> Self {
        Self { rows: len, cols: 1 }
    }

    pub fn scalar() -> Self {
        Self { rows: 1, cols: 1 }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
pub struct ParamEntry {
    pub shape: Shape,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamError {
    Missing(String),
    ShapeMismatch {
        name: String,
        expected: Shape,
        got: Shape,
    },
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::Missing(name) => write!(f, "unknown parameter `{name}`"),
            ParamError::ShapeMismatch {
                name,
                expected,
                got,
            } => write!(
                f,
                "parameter `{name}` has shape {}x{}, expected {}x{}",
                got.rows, got.cols, expected.rows, expected.cols
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ParamError {}

/// All trainable tensors, addressed by stable names. Iteration order is the
/// lexicographic name order (deterministic across runs).
#[derive(Clone, Debug, Default)]
pub struct ParameterStore {
    entries: BTreeMap<String, ParamEntry>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a tensor; the gradient slot is zero-initialized to the same
    /// shape.
    pub fn insert(&mut self, name: &str, shape: Shape, value: Vec<f64>) {
        assert_eq!(shape.len(), value.len(), "value length must match shape");
        assert!(
            !self.entries.contains_key(name),
            "duplicate parameter `{name}`"
        );
        let grad = vec![0.0; value.len()];
        self.entries.insert(
            String::from(name),
            ParamEntry { shape, value, grad },
        );
    }

    pub fn get(&self, name: &str) -> Result<&ParamEntry, ParamError> {
        self.entries
            .get(name)
            .ok_or_else(|| ParamError::Missing(String::from(name)))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut ParamEntry, ParamError> {
        self.entries
            .get_mut(name)
            .ok_or_else(|| ParamError::Missing(String::from(name)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ParamEntry)> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut ParamEntry)> {
        self.entries.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar elements across all tensors.
    pub fn element_count(&self) -> usize {
        self.entries.values().map(|e| e.value.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        for entry in self.entries.values_mut() {
            entry.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }
}

/// A read-only view of the store with every element mapped into a scalar type:
/// plain `f64` for evaluation / finite differences, tape [`Var`]s for training.
pub struct ParamSet<S> {
    entries: BTreeMap<String, (Shape, Vec<S>)>,
}

impl<S: Scalar> ParamSet<S> {
    pub fn vec(&self, name: &str) -> Result<&[S], ParamError> {
        self.entries
            .get(name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| ParamError::Missing(String::from(name)))
    }

    pub fn scalar(&self, name: &str) -> Result<S, ParamError> {
        let v = self.vec(name)?;
        assert_eq!(v.len(), 1, "parameter `{name}` is not a scalar");
        Ok(v[0].clone())
    }

    /// Row-major matrix view.
    pub fn rows(&self, name: &str) -> Result<Vec<Vec<S>>, ParamError> {
        let (shape, v) = self
            .entries
            .get(name)
            .ok_or_else(|| ParamError::Missing(String::from(name)))?;
        Ok(v.chunks(shape.cols).map(|c| c.to_vec()).collect())
    }
}

impl ParamSet<f64> {
    pub fn bind(store: &ParameterStore) -> Self {
        let entries = store
            .iter()
            .map(|(name, e)| (name.clone(), (e.shape, e.value.clone())))
            .collect();
        Self { entries }
    }

    /// Bind with one element nudged by `delta` (finite-difference probes).
    pub fn bind_perturbed(
        store: &ParameterStore,
        name: &str,
        index: usize,
        delta: f64,
    ) -> Result<Self, ParamError> {
        store.get(name)?; // existence check
        let mut set = Self::bind(store);
        let (_, v) = set
            .entries
            .get_mut(name)
            .expect("checked above");
        v[index] += delta;
        Ok(set)
    }
}

impl ParamSet<Var> {
    /// Bind every element as a tape leaf.
    pub fn bind_tape(store: &ParameterStore, tape: &Tape) -> Self {
        let entries = store
            .iter()
            .map(|(name, e)| {
                let vars: Vec<Var> = e.value.iter().map(|&v| tape.var(v)).collect();
                (name.clone(), (e.shape, vars))
            })
            .collect();
        Self { entries }
    }

    /// Accumulate the gradients of the most recent backward pass into `store`,
    /// scaled by `weight`.
    pub fn accumulate_grads(&self, store: &mut ParameterStore, weight: f64) {
        for (name, (_, vars)) in &self.entries {
            let entry = store.get_mut(name).expect("bound parameter exists");
            for (g, var) in entry.grad.iter_mut().zip(vars) {
                *g += weight * var.grad();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_and_lookup() {
        let mut store = ParameterStore::new();
        store.insert("w", Shape::matrix(2, 3), vec![1.0; 6]);
        assert_eq!(store.get("w").unwrap().shape, Shape::matrix(2, 3));
        assert!(matches!(store.get("nope"), Err(ParamError::Missing(_))));
    }

    #[test]
    fn tape_binding_collects_grads() {
        let mut store = ParameterStore::new();
        store.insert("p", Shape::vector(2), vec![1.0, 2.0]);
        let tape = Tape::new();
        let set = ParamSet::bind_tape(&store, &tape);
        let p = set.vec("p").unwrap();
        let loss = p[0].clone() * p[0].clone() + p[1].clone() * p[1].clone();
        loss.backward().unwrap();
        set.accumulate_grads(&mut store, 1.0);
        assert_eq!(store.get("p").unwrap().grad, vec![2.0, 4.0]);
    }

    #[test]
    fn rows_view_matches_shape() {
        let mut store = ParameterStore::new();
        store.insert("m", Shape::matrix(2, 2), vec![1.0, 2.0, 3.0, 4.0]);
        let set = ParamSet::<f64>::bind(&store);
        let rows = set.rows("m").unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }
}
