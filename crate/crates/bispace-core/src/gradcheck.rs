//! Central-difference verification of reverse-accumulated gradients.
//!
//! The same generic loss is evaluated on the tape (analytic gradients) and on
//! plain `f64` with per-element `±h` nudges (numeric gradients); the report
//! carries the worst relative error and the parameter that produced it.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::params::{ParamSet, ParameterStore};
use crate::scalar::Scalar;
use crate::tape::{EngineError, Tape, Var};

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-4;
/// Default pass tolerance on the relative error.
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
/// Relative-error denominator floor.
const DENOM_FLOOR: f64 = 1e-8;

/// A scalar loss evaluated generically, so one definition drives both the
/// analytic and the finite-difference route.
pub trait DifferentiableLoss {
    fn loss<S: Scalar>(&self, params: &ParamSet<S>) -> S;
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub elements_checked: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: max relative error {:.3e} (tolerance {:.1e}) at `{}`[{}] over {} elements",
            if self.passed() { "PASS" } else { "FAIL" },
            self.max_rel_err,
            self.tolerance,
            self.worst_param,
            self.worst_index,
            self.elements_checked
        )
    }
}

/// Compute analytic gradients for every parameter of `store` under `loss`.
pub fn analytic_gradients(
    store: &ParameterStore,
    loss: &impl DifferentiableLoss,
) -> Result<BTreeMap<String, Vec<f64>>, EngineError> {
    let tape = Tape::new();
    let set: ParamSet<Var> = ParamSet::bind_tape(store, &tape);
    let l = loss.loss(&set);
    l.backward()?;
    let mut grads = BTreeMap::new();
    for (name, _) in store.iter() {
        let vars = set.vec(name).expect("bound parameter");
        grads.insert(name.clone(), vars.iter().map(Var::grad).collect());
    }
    Ok(grads)
}

/// Compare a set of claimed gradients against central differences of the
/// `f64` route, element by element.
pub fn compare_with_central_differences(
    store: &ParameterStore,
    loss: &impl DifferentiableLoss,
    claimed: &BTreeMap<String, Vec<f64>>,
    step: f64,
    tolerance: f64,
) -> GradCheckReport {
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        elements_checked: 0,
        tolerance,
    };
    for (name, entry) in store.iter() {
        let analytic = &claimed[name];
        for i in 0..entry.value.len() {
            let plus = ParamSet::bind_perturbed(store, name, i, step).expect("param exists");
            let minus = ParamSet::bind_perturbed(store, name, i, -step).expect("param exists");
            let numeric = (loss.loss(&plus) - loss.loss(&minus)) / (2.0 * step);
            let denom = math::fmax(
                math::fmax(math::abs(analytic[i]), math::abs(numeric)),
                DENOM_FLOOR,
            );
            let rel = math::abs(analytic[i] - numeric) / denom;
            report.elements_checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst_param = name.clone();
                report.worst_index = i;
            }
        }
    }
    report
}

/// Full check: analytic gradients vs central differences.
pub fn gradcheck(
    store: &ParameterStore,
    loss: &impl DifferentiableLoss,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport, EngineError> {
    let analytic = analytic_gradients(store, loss)?;
    Ok(compare_with_central_differences(
        store, loss, &analytic, step, tolerance,
    ))
}
