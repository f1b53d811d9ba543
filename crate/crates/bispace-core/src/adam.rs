//! The Adam update rule and learning-rate schedules.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::params::ParameterStore;

#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Optimizer state: step counter plus per-parameter first/second moments,
/// zero-initialized on first contact with each parameter.
pub struct AdamState {
    pub cfg: AdamConfig,
    pub step: u64,
    first: BTreeMap<String, Vec<f64>>,
    second: BTreeMap<String, Vec<f64>>,
}

impl AdamState {
    pub fn new(cfg: AdamConfig) -> Self {
        Self {
            cfg,
            step: 0,
            first: BTreeMap::new(),
            second: BTreeMap::new(),
        }
    }
}

/// One bias-corrected Adam step over every parameter in the store using the
/// gradients currently held there. Increments the step counter and zeroes the
/// gradients afterwards. `lr` overrides the configured base rate (schedules).
pub fn adam_step(store: &mut ParameterStore, state: &mut AdamState, lr: f64) {
    state.step += 1;
    let t = state.step as i32;
    let c = state.cfg;
    let bc1 = 1.0 - powi(c.beta1, t);
    let bc2 = 1.0 - powi(c.beta2, t);

    for (name, entry) in store.iter_mut() {
        let m = state
            .first
            .entry(name.clone())
            .or_insert_with(|| vec![0.0; entry.value.len()]);
        let v = state
            .second
            .entry(name.clone())
            .or_insert_with(|| vec![0.0; entry.value.len()]);
        for i in 0..entry.value.len() {
            let g = entry.grad[i];
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            entry.value[i] -= lr * m_hat / (math::sqrt(v_hat) + c.eps);
        }
    }
    store.zero_grads();
}

fn powi(base: f64, exp: i32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Per-epoch learning-rate schedule, expressed as a factor on the base rate.
#[derive(Clone, Debug, PartialEq)]
pub enum LrSchedule {
    Constant,
    /// Cosine annealing from the base rate down to zero over `total_epochs`.
    Cosine { total_epochs: usize },
    /// Decay by `gamma` at each listed epoch.
    MultiStep { milestones: Vec<usize>, gamma: f64 },
}

impl LrSchedule {
    pub fn factor(&self, epoch: usize) -> f64 {
        match self {
            LrSchedule::Constant => 1.0,
            LrSchedule::Cosine { total_epochs } => {
                let total = (*total_epochs).max(1);
                0.5 * (1.0 + math::cos(core::f64::consts::PI * epoch as f64 / total as f64))
            }
            LrSchedule::MultiStep { milestones, gamma } => {
                let hits = milestones.iter().filter(|&&m| epoch >= m).count() as i32;
                powi(*gamma, hits)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Shape;
    use crate::tape::Tape;

    #[test]
    fn zero_gradient_leaves_parameter_unchanged() {
        let mut store = ParameterStore::new();
        store.insert("p", Shape::vector(1), vec![1.5]);
        let mut state = AdamState::new(AdamConfig::default());
        adam_step(&mut store, &mut state, 1e-3);
        assert_eq!(store.get("p").unwrap().value, vec![1.5]);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_with_unit_gradient_moves_by_lr() {
        // Bias-corrected Adam at t=1 with g=1: m_hat = 1, v_hat = 1, so the
        // update is -lr / (1 + eps) = -1e-3 to within 1e-9.
        let mut store = ParameterStore::new();
        store.insert("p", Shape::vector(1), vec![0.0]);
        store.get_mut("p").unwrap().grad[0] = 1.0;
        let mut state = AdamState::new(AdamConfig::default());
        adam_step(&mut store, &mut state, 1e-3);
        let p = store.get("p").unwrap().value[0];
        assert!((p - (-1e-3)).abs() < 1e-9, "got {p}");
        // grads zeroed afterwards
        assert_eq!(store.get("p").unwrap().grad, vec![0.0]);
    }

    #[test]
    fn quadratic_loss_decreases_over_100_steps() {
        // loss = (p0 - 3)^2 + (p1 + 2)^2
        let mut store = ParameterStore::new();
        store.insert("p", Shape::vector(2), vec![0.0, 0.0]);
        let mut state = AdamState::new(AdamConfig {
            lr: 0.05,
            ..AdamConfig::default()
        });
        let loss_of = |v: &[f64]| (v[0] - 3.0).powi(2) + (v[1] + 2.0).powi(2);
        let initial = loss_of(&store.get("p").unwrap().value);
        for _ in 0..100 {
            let tape = Tape::new();
            let set = crate::params::ParamSet::bind_tape(&store, &tape);
            let p = set.vec("p").unwrap().to_vec();
            let loss = (p[0].clone() - 3.0) * (p[0].clone() - 3.0)
                + (p[1].clone() + 2.0) * (p[1].clone() + 2.0);
            loss.backward().unwrap();
            set.accumulate_grads(&mut store, 1.0);
            adam_step(&mut store, &mut state, 0.05);
        }
        let after = loss_of(&store.get("p").unwrap().value);
        assert!(after < initial * 0.2, "loss {initial} -> {after}");
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let s = LrSchedule::Cosine { total_epochs: 10 };
        assert!((s.factor(0) - 1.0).abs() < 1e-12);
        assert!((s.factor(5) - 0.5).abs() < 1e-12);
        assert!(s.factor(10).abs() < 1e-12);
    }

    #[test]
    fn multistep_schedule_decays_at_milestones() {
        let s = LrSchedule::MultiStep {
            milestones: vec![4, 8],
            gamma: 0.1,
        };
        assert_eq!(s.factor(0), 1.0);
        assert!((s.factor(4) - 0.1).abs() < 1e-15);
        assert!((s.factor(9) - 0.01).abs() < 1e-15);
    }
}
