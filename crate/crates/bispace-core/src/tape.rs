//! Reverse-accumulation gradient engine over a fixed scalar op set.
//!
//! A [`Tape`] records every operation performed on its [`Var`]s during a
//! forward pass; [`Var::backward`] then sweeps the recorded ops in reverse to
//! accumulate exact gradients. The op set is exactly what the rest of the
//! crate needs — arithmetic, the hyperbolic transcendentals, sigmoid-family
//! activations and the two stop-gradient clamps.
//!
//! Gradient conventions for the non-smooth ops:
//! * `acosh_clamped` and `clamp_stop` are stop-gradients while the clamp is
//!   active.
//! * `relu` has zero gradient at exactly 0.
//! * `max` routes the incoming gradient to the larger operand; ties go to the
//!   left operand.

use alloc::rc::Rc;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::math;
use crate::scalar::{Scalar, ACOSH_ARG_MIN};

/// Error raised by [`Var::backward`] when the tape holds non-finite values.
#[derive(Debug, Clone, PartialEq)]
pub enum EngineError {
    /// A recorded op produced a non-finite value.
    NonFiniteValue { op: &'static str, index: usize },
    /// A leaf (input or parameter) was non-finite.
    NonFiniteLeaf { index: usize },
    /// Backward produced a non-finite gradient.
    NonFiniteGrad { op: &'static str, index: usize },
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::NonFiniteValue { op, index } => {
                write!(f, "non-finite value produced by op `{op}` at tape slot {index}")
            }
            EngineError::NonFiniteLeaf { index } => {
                write!(f, "non-finite leaf value at tape slot {index}")
            }
            EngineError::NonFiniteGrad { op, index } => {
                write!(f, "non-finite gradient flowing into op `{op}` at tape slot {index}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EngineError {}

#[derive(Clone, Copy, Debug)]
enum OpKind {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    AddConst,
    MulConst(f64),
    DivConst(f64),
    Exp,
    Ln,
    Sqrt,
    Cosh,
    Sinh,
    AcoshClamped,
    Sigmoid,
    Relu,
    Silu,
    ClampStop { lo: f64, hi: f64 },
    Max,
}

impl OpKind {
    fn is_binary(&self) -> bool {
        matches!(
            self,
            OpKind::Add | OpKind::Sub | OpKind::Mul | OpKind::Div | OpKind::Max
        )
    }

    fn name(&self) -> &'static str {
        match self {
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Mul => "mul",
            OpKind::Div => "div",
            OpKind::Neg => "neg",
            OpKind::AddConst => "add_const",
            OpKind::MulConst(_) => "mul_const",
            OpKind::DivConst(_) => "div_const",
            OpKind::Exp => "exp",
            OpKind::Ln => "ln",
            OpKind::Sqrt => "sqrt",
            OpKind::Cosh => "cosh",
            OpKind::Sinh => "sinh",
            OpKind::AcoshClamped => "acosh_clamped",
            OpKind::Sigmoid => "sigmoid",
            OpKind::Relu => "relu",
            OpKind::Silu => "silu",
            OpKind::ClampStop { .. } => "clamp_stop",
            OpKind::Max => "max",
        }
    }
}

struct Op {
    kind: OpKind,
    a: u32,
    b: u32,
    out: u32,
}

#[derive(Default)]
struct TapeInner {
    vals: Vec<f64>,
    grads: Vec<f64>,
    ops: Vec<Op>,
}

impl TapeInner {
    fn push_leaf(&mut self, v: f64) -> u32 {
        let idx = self.vals.len();
        self.vals.push(v);
        u32::try_from(idx).expect("tape overflow")
    }

    fn push_op(&mut self, kind: OpKind, a: u32, b: u32, v: f64) -> u32 {
        let out = self.push_leaf(v);
        self.ops.push(Op { kind, a, b, out });
        out
    }

    fn backward_from(&mut self, seed: u32) -> Result<(), EngineError> {
        for op in &self.ops {
            if !self.vals[op.out as usize].is_finite() {
                return Err(EngineError::NonFiniteValue {
                    op: op.kind.name(),
                    index: op.out as usize,
                });
            }
        }
        if let Some(index) = self.vals.iter().position(|v| !v.is_finite()) {
            return Err(EngineError::NonFiniteLeaf { index });
        }

        self.grads.clear();
        self.grads.resize(self.vals.len(), 0.0);
        self.grads[seed as usize] = 1.0;

        for op in self.ops.iter().rev() {
            let go = self.grads[op.out as usize];
            if go == 0.0 {
                continue;
            }
            let (a, b, out) = (op.a as usize, op.b as usize, op.out as usize);
            match op.kind {
                OpKind::Add => {
                    self.grads[a] += go;
                    self.grads[b] += go;
                }
                OpKind::Sub => {
                    self.grads[a] += go;
                    self.grads[b] -= go;
                }
                OpKind::Mul => {
                    let (va, vb) = (self.vals[a], self.vals[b]);
                    self.grads[a] += go * vb;
                    self.grads[b] += go * va;
                }
                OpKind::Div => {
                    let (va, vb) = (self.vals[a], self.vals[b]);
                    self.grads[a] += go / vb;
                    self.grads[b] -= go * va / (vb * vb);
                }
                OpKind::Neg => self.grads[a] -= go,
                OpKind::AddConst => self.grads[a] += go,
                OpKind::MulConst(c) => self.grads[a] += go * c,
                OpKind::DivConst(c) => self.grads[a] += go / c,
                OpKind::Exp => self.grads[a] += go * self.vals[out],
                OpKind::Ln => self.grads[a] += go / self.vals[a],
                OpKind::Sqrt => self.grads[a] += go / (2.0 * self.vals[out]),
                OpKind::Cosh => self.grads[a] += go * math::sinh(self.vals[a]),
                OpKind::Sinh => self.grads[a] += go * math::cosh(self.vals[a]),
                OpKind::AcoshClamped => {
                    let va = self.vals[a];
                    if va > ACOSH_ARG_MIN {
                        self.grads[a] += go / math::sqrt(va * va - 1.0);
                    }
                }
                OpKind::Sigmoid => {
                    let s = self.vals[out];
                    self.grads[a] += go * s * (1.0 - s);
                }
                OpKind::Relu => {
                    if self.vals[a] > 0.0 {
                        self.grads[a] += go;
                    }
                }
                OpKind::Silu => {
                    let s = math::sigmoid(self.vals[a]);
                    self.grads[a] += go * s * (1.0 + self.vals[a] * (1.0 - s));
                }
                OpKind::ClampStop { lo, hi } => {
                    let va = self.vals[a];
                    if va >= lo && va <= hi {
                        self.grads[a] += go;
                    }
                }
                OpKind::Max => {
                    if self.vals[a] >= self.vals[b] {
                        self.grads[a] += go;
                    } else {
                        self.grads[b] += go;
                    }
                }
            }
        }

        if let Some(index) = self.grads.iter().position(|g| !g.is_finite()) {
            // Name the op that consumed this slot: its backward rule produced
            // the bad contribution.
            let op = self
                .ops
                .iter()
                .find(|op| {
                    op.a as usize == index || (op.kind.is_binary() && op.b as usize == index)
                })
                .or_else(|| self.ops.iter().find(|op| op.out as usize == index));
            return Err(EngineError::NonFiniteGrad {
                op: op.map_or("seed", |op| op.kind.name()),
                index,
            });
        }
        Ok(())
    }
}

/// Records operations for reverse-mode differentiation.
#[derive(Clone, Default)]
pub struct Tape {
    inner: Rc<RefCell<TapeInner>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// A differentiable leaf variable.
    pub fn var(&self, value: f64) -> Var {
        let idx = self.inner.borrow_mut().push_leaf(value);
        Var {
            tape: self.clone(),
            idx,
        }
    }

    /// A constant leaf (identical to [`Tape::var`]; its gradient is simply
    /// never read).
    pub fn lit(&self, value: f64) -> Var {
        self.var(value)
    }

    /// Number of slots currently recorded (leaves plus op outputs).
    pub fn len(&self) -> usize {
        self.inner.borrow().vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A scalar recorded on a [`Tape`].
#[derive(Clone)]
pub struct Var {
    tape: Tape,
    idx: u32,
}

impl Var {
    /// Current numeric value.
    pub fn value(&self) -> f64 {
        self.tape.inner.borrow().vals[self.idx as usize]
    }

    /// Reverse sweep seeding `d(self)/d(self) = 1`.
    ///
    /// Fails if any recorded value (or resulting gradient) is non-finite,
    /// naming the op that produced it.
    pub fn backward(&self) -> Result<(), EngineError> {
        self.tape.inner.borrow_mut().backward_from(self.idx)
    }

    /// Gradient accumulated by the most recent [`Var::backward`] on this tape.
    ///
    /// Panics if no backward pass has run.
    pub fn grad(&self) -> f64 {
        let inner = self.tape.inner.borrow();
        assert!(
            !inner.grads.is_empty(),
            "Var::grad called before backward()"
        );
        inner.grads[self.idx as usize]
    }

    fn unary(&self, kind: OpKind, v: f64) -> Var {
        let idx = self.tape.inner.borrow_mut().push_op(kind, self.idx, 0, v);
        Var {
            tape: self.tape.clone(),
            idx,
        }
    }

    fn binary(&self, rhs: &Var, kind: OpKind, v: f64) -> Var {
        assert!(
            Rc::ptr_eq(&self.tape.inner, &rhs.tape.inner),
            "vars must share a tape"
        );
        let idx = self
            .tape
            .inner
            .borrow_mut()
            .push_op(kind, self.idx, rhs.idx, v);
        Var {
            tape: self.tape.clone(),
            idx,
        }
    }
}

macro_rules! var_binop {
    ($trait:ident, $method:ident, $kind:expr, $f:expr) => {
        impl $trait for Var {
            type Output = Var;
            fn $method(self, rhs: Var) -> Var {
                let v = $f(self.value(), rhs.value());
                self.binary(&rhs, $kind, v)
            }
        }
    };
}

var_binop!(Add, add, OpKind::Add, |a, b| a + b);
var_binop!(Sub, sub, OpKind::Sub, |a, b| a - b);
var_binop!(Mul, mul, OpKind::Mul, |a, b| a * b);
var_binop!(Div, div, OpKind::Div, |a, b| a / b);

impl Neg for Var {
    type Output = Var;
    fn neg(self) -> Var {
        let v = -self.value();
        self.unary(OpKind::Neg, v)
    }
}

impl Add<f64> for Var {
    type Output = Var;
    fn add(self, c: f64) -> Var {
        let v = self.value() + c;
        self.unary(OpKind::AddConst, v)
    }
}

impl Sub<f64> for Var {
    type Output = Var;
    fn sub(self, c: f64) -> Var {
        let v = self.value() - c;
        self.unary(OpKind::AddConst, v)
    }
}

impl Mul<f64> for Var {
    type Output = Var;
    fn mul(self, c: f64) -> Var {
        let v = self.value() * c;
        self.unary(OpKind::MulConst(c), v)
    }
}

impl Div<f64> for Var {
    type Output = Var;
    fn div(self, c: f64) -> Var {
        let v = self.value() / c;
        self.unary(OpKind::DivConst(c), v)
    }
}

impl Scalar for Var {
    fn val(&self) -> f64 {
        self.value()
    }

    fn lit(&self, c: f64) -> Self {
        self.tape.lit(c)
    }

    fn exp(&self) -> Self {
        self.unary(OpKind::Exp, math::exp(self.value()))
    }

    fn ln(&self) -> Self {
        self.unary(OpKind::Ln, math::ln(self.value()))
    }

    fn sqrt(&self) -> Self {
        self.unary(OpKind::Sqrt, math::sqrt(self.value()))
    }

    fn cosh(&self) -> Self {
        self.unary(OpKind::Cosh, math::cosh(self.value()))
    }

    fn sinh(&self) -> Self {
        self.unary(OpKind::Sinh, math::sinh(self.value()))
    }

    fn acosh_clamped(&self) -> Self {
        let v = math::acosh(math::fmax(self.value(), ACOSH_ARG_MIN));
        self.unary(OpKind::AcoshClamped, v)
    }

    fn sigmoid(&self) -> Self {
        self.unary(OpKind::Sigmoid, math::sigmoid(self.value()))
    }

    fn relu(&self) -> Self {
        let v = self.value();
        self.unary(OpKind::Relu, if v > 0.0 { v } else { 0.0 })
    }

    fn silu(&self) -> Self {
        let v = self.value();
        self.unary(OpKind::Silu, v * math::sigmoid(v))
    }

    fn clamp_stop(&self, lo: f64, hi: f64) -> Self {
        let v = self.value().clamp_stop(lo, hi);
        self.unary(OpKind::ClampStop { lo, hi }, v)
    }

    fn max(&self, other: &Self) -> Self {
        let v = math::fmax(self.value(), other.value());
        self.binary(other, OpKind::Max, v)
    }
}
