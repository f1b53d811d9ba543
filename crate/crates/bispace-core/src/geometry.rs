//! The Lorentz (hyperboloid) model of hyperbolic space.
//!
//! Points live on the upper sheet `{x in R^{n+1} : <x,x>_L = 1/K, x_0 > 0}` of
//! the two-sheeted hyperboloid with constant negative curvature `K`, where
//! `<x,y>_L = -x_0 y_0 + sum_{i>=1} x_i y_i` is the Lorentzian scalar product.
//! The time coordinate comes first throughout.
//!
//! Numerical conventions:
//! * the Lorentzian norm is `sqrt(|<v,v>_L|)` — the absolute value makes the
//!   norm usable on timelike vectors (weighted sums of points);
//! * `acosh` arguments are clamped to `>= 1 + 1e-12` to absorb rounding on
//!   near-identical points, acting as a stop-gradient while active;
//! * degenerate directions (`log` of a point onto itself, the zero vector in
//!   `exp` and the Euclidean lift) return the analytic limit instead of
//!   dividing by zero.
//!
//! The exponential/logarithmic maps follow the standard closed forms, which
//! are mutually inverse at the default curvature `K = -1`; at other curvatures
//! the pair composes to a constant `sqrt(-K)` scaling (covered by tests).
//!
//! All functions are pure; everything is freely shareable across threads.

use alloc::vec::Vec;
use core::fmt;

use crate::linalg;
use crate::math;
use crate::scalar::{Scalar, ACOSH_ARG_MIN};

/// Tolerance used when validating the manifold / tangency invariants of
/// caller-supplied data.
pub const INVARIANT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    /// Curvature must be strictly negative.
    InvalidCurvature(f64),
    DimensionMismatch { expected: usize, got: usize },
    /// Ambient vectors need at least a time and one space coordinate.
    AmbientTooShort(usize),
    /// `<x,x>_L` deviates from `1/K` by more than the tolerance, or the time
    /// coordinate is not positive.
    OffManifold { residual: f64 },
    /// `<v,x>_L` deviates from zero by more than the tolerance.
    NotTangent { residual: f64 },
    CurvatureMismatch { left: f64, right: f64 },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::InvalidCurvature(k) => {
                write!(f, "curvature must be strictly negative, got {k}")
            }
            GeometryError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            GeometryError::AmbientTooShort(n) => {
                write!(f, "ambient vector needs length >= 2, got {n}")
            }
            GeometryError::OffManifold { residual } => {
                write!(f, "point is off the hyperboloid (residual {residual:.3e})")
            }
            GeometryError::NotTangent { residual } => {
                write!(f, "vector is not tangent (residual {residual:.3e})")
            }
            GeometryError::CurvatureMismatch { left, right } => {
                write!(f, "curvature mismatch: {left} vs {right}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GeometryError {}

/// Constant negative curvature of the hyperboloid. Defaults to `-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature(f64);

impl Curvature {
    pub fn new(k: f64) -> Result<Self, GeometryError> {
        if !(k < 0.0) || !k.is_finite() {
            return Err(GeometryError::InvalidCurvature(k));
        }
        Ok(Self(k))
    }

    pub fn k(&self) -> f64 {
        self.0
    }

    /// `1/K` (negative).
    pub fn recip(&self) -> f64 {
        1.0 / self.0
    }

    /// `sqrt(-K)`.
    pub fn sqrt_neg(&self) -> f64 {
        math::sqrt(-self.0)
    }
}

impl Default for Curvature {
    fn default() -> Self {
        Self(-1.0)
    }
}

/// Lorentzian scalar product `-x_0 y_0 + sum_{i>=1} x_i y_i`.
pub fn lorentz_inner<S: Scalar>(x: &[S], y: &[S]) -> Result<S, GeometryError> {
    if x.len() != y.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(GeometryError::AmbientTooShort(x.len()));
    }
    Ok(inner(x, y))
}

fn inner<S: Scalar>(x: &[S], y: &[S]) -> S {
    let mut acc = -(x[0].clone() * y[0].clone());
    for i in 1..x.len() {
        acc = acc + x[i].clone() * y[i].clone();
    }
    acc
}

fn inner_mixed<S: Scalar>(x: &[S], y: &[f64]) -> S {
    let mut acc = -(x[0].clone() * y[0]);
    for i in 1..x.len() {
        acc = acc + x[i].clone() * y[i];
    }
    acc
}

/// Lorentzian norm `sqrt(|<v,v>_L|)`.
pub fn lorentz_norm<S: Scalar>(v: &[S]) -> S {
    if v.is_empty() {
        panic!("lorentz_norm of empty vector");
    }
    if v.len() == 1 {
        // Degenerate but well-defined: |-v0*v0| = v0^2.
        return (v[0].clone() * v[0].clone()).sqrt();
    }
    let q = inner(v, v);
    if q.val() < 0.0 {
        (-q).sqrt()
    } else {
        q.sqrt()
    }
}

/// A point on the curvature-`K` hyperboloid, time coordinate first.
#[derive(Clone, Debug)]
pub struct LorentzPoint<S> {
    coords: Vec<S>,
    curv: Curvature,
}

impl<S: Scalar> LorentzPoint<S> {
    /// Validating constructor: `|<x,x>_L - 1/K| <= 1e-9` and `x_0 > 0`.
    pub fn try_new(coords: Vec<S>, curv: Curvature) -> Result<Self, GeometryError> {
        if coords.len() < 2 {
            return Err(GeometryError::AmbientTooShort(coords.len()));
        }
        let p = Self { coords, curv };
        let residual = p.manifold_residual();
        if residual > INVARIANT_TOL || !(p.coords[0].val() > 0.0) {
            return Err(GeometryError::OffManifold { residual });
        }
        Ok(p)
    }

    pub(crate) fn new_unchecked(coords: Vec<S>, curv: Curvature) -> Self {
        Self { coords, curv }
    }

    /// The origin `(sqrt(-1/K), 0, ..., 0)`, built in the evaluation context
    /// of `like`.
    pub fn origin_like(like: &S, spatial_dim: usize, curv: Curvature) -> Self {
        let mut coords = Vec::with_capacity(spatial_dim + 1);
        coords.push(like.lit(math::sqrt(-curv.recip())));
        for _ in 0..spatial_dim {
            coords.push(like.lit(0.0));
        }
        Self { coords, curv }
    }

    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    pub fn time(&self) -> &S {
        &self.coords[0]
    }

    pub fn spatial(&self) -> &[S] {
        &self.coords[1..]
    }

    pub fn curvature(&self) -> Curvature {
        self.curv
    }

    pub fn ambient_dim(&self) -> usize {
        self.coords.len()
    }

    pub fn spatial_dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// `|<x,x>_L - 1/K|` evaluated on current values.
    pub fn manifold_residual(&self) -> f64 {
        let vals: Vec<f64> = self.coords.iter().map(Scalar::val).collect();
        let q = inner(&vals, &vals);
        math::abs(q - self.curv.recip())
    }
}

impl LorentzPoint<f64> {
    pub fn origin(spatial_dim: usize, curv: Curvature) -> Self {
        Self::origin_like(&0.0, spatial_dim, curv)
    }
}

/// A vector in the tangent space at `base`: `<vec, base>_L = 0`.
#[derive(Clone, Debug)]
pub struct TangentVector<S> {
    base: LorentzPoint<S>,
    vec: Vec<S>,
}

impl<S: Scalar> TangentVector<S> {
    pub fn try_new(base: LorentzPoint<S>, vec: Vec<S>) -> Result<Self, GeometryError> {
        if vec.len() != base.ambient_dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: base.ambient_dim(),
                got: vec.len(),
            });
        }
        let bvals: Vec<f64> = base.coords().iter().map(Scalar::val).collect();
        let vvals: Vec<f64> = vec.iter().map(Scalar::val).collect();
        let residual = math::abs(inner(&vvals, &bvals));
        if residual > INVARIANT_TOL {
            return Err(GeometryError::NotTangent { residual });
        }
        Ok(Self { base, vec })
    }

    pub(crate) fn new_unchecked(base: LorentzPoint<S>, vec: Vec<S>) -> Self {
        Self { base, vec }
    }

    pub fn zero(base: LorentzPoint<S>) -> Self {
        let vec = base.coords().iter().map(|c| c.lit(0.0)).collect();
        Self { base, vec }
    }

    pub fn base(&self) -> &LorentzPoint<S> {
        &self.base
    }

    pub fn vec(&self) -> &[S] {
        &self.vec
    }

    pub fn lorentz_norm(&self) -> S {
        lorentz_norm(&self.vec)
    }
}

/// Complete the time coordinate so the spatial part lands on the hyperboloid:
/// `(sqrt(|s|^2 - 1/K), s)`.
pub fn lift_to_manifold<S: Scalar>(spatial: &[S], curv: Curvature) -> LorentzPoint<S> {
    assert!(!spatial.is_empty(), "lift_to_manifold: empty spatial vector");
    let mut sq = spatial[0].clone() * spatial[0].clone();
    for s in &spatial[1..] {
        sq = sq + s.clone() * s.clone();
    }
    let time = (sq - curv.recip()).sqrt();
    let mut coords = Vec::with_capacity(spatial.len() + 1);
    coords.push(time);
    coords.extend(spatial.iter().cloned());
    LorentzPoint::new_unchecked(coords, curv)
}

/// Exponential map at the origin applied to `[0, x]`: the Euclidean-to-Lorentz
/// lift. The zero vector maps to the origin analytically.
///
/// At `K = -1` this is `(cosh |x|, sinh |x| * x/|x|)`; the general form scales
/// the argument by `sqrt(-K)` so the result stays on the curvature-`K` sheet.
pub fn euclid_to_lorentz<S: Scalar>(x: &[S], curv: Curvature) -> LorentzPoint<S> {
    assert!(!x.is_empty(), "euclid_to_lorentz: empty vector");
    let a = curv.sqrt_neg();
    let r_val: f64 = {
        let sq: f64 = x.iter().map(|v| v.val() * v.val()).sum();
        math::sqrt(sq)
    };
    if r_val == 0.0 {
        return LorentzPoint::origin_like(&x[0], x.len(), curv);
    }
    let r = linalg::euclidean_norm(x);
    let s = r.clone() * a;
    let time = s.cosh() / a;
    // sinh(a r) * x / (a r)
    let ratio = s.clone().sinh() / s;
    let mut coords = Vec::with_capacity(x.len() + 1);
    coords.push(time);
    for v in x {
        coords.push(v.clone() * ratio.clone());
    }
    LorentzPoint::new_unchecked(coords, curv)
}

/// Geodesic distance `arcosh(K <x,y>_L)`, clamped to be well-defined on
/// near-identical points.
pub fn geodesic_distance<S: Scalar>(
    x: &LorentzPoint<S>,
    y: &LorentzPoint<S>,
) -> Result<S, GeometryError> {
    check_pair(x, y)?;
    let arg = inner(x.coords(), y.coords()) * x.curvature().k();
    Ok(arg.acosh_clamped())
}

/// Distance against a constant (non-differentiated) point.
pub fn geodesic_distance_mixed<S: Scalar>(
    x: &LorentzPoint<S>,
    y: &LorentzPoint<f64>,
) -> Result<S, GeometryError> {
    if x.ambient_dim() != y.ambient_dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: x.ambient_dim(),
            got: y.ambient_dim(),
        });
    }
    if x.curvature() != y.curvature() {
        return Err(GeometryError::CurvatureMismatch {
            left: x.curvature().k(),
            right: y.curvature().k(),
        });
    }
    let arg = inner_mixed(x.coords(), y.coords()) * x.curvature().k();
    Ok(arg.acosh_clamped())
}

/// Lorentzian similarity `exp(-d_L(x, y))`, in `(0, 1]`.
pub fn lorentz_similarity<S: Scalar>(
    x: &LorentzPoint<S>,
    y: &LorentzPoint<S>,
) -> Result<S, GeometryError> {
    Ok((-geodesic_distance(x, y)?).exp())
}

/// Similarity against a constant point.
pub fn lorentz_similarity_mixed<S: Scalar>(
    x: &LorentzPoint<S>,
    y: &LorentzPoint<f64>,
) -> Result<S, GeometryError> {
    Ok((-geodesic_distance_mixed(x, y)?).exp())
}

/// Exponential map: `cosh(a|v|) x + sinh(a|v|) v / (a|v|)` with `a = sqrt(-K)`.
/// The zero tangent returns the base point.
pub fn exp_map<S: Scalar>(
    x: &LorentzPoint<S>,
    v: &TangentVector<S>,
) -> Result<LorentzPoint<S>, GeometryError> {
    let base_residual = x.manifold_residual();
    if base_residual > 1e-6 {
        return Err(GeometryError::OffManifold {
            residual: base_residual,
        });
    }
    if v.vec().len() != x.ambient_dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: x.ambient_dim(),
            got: v.vec().len(),
        });
    }
    let xvals: Vec<f64> = x.coords().iter().map(Scalar::val).collect();
    let vvals: Vec<f64> = v.vec().iter().map(Scalar::val).collect();
    let tangency = math::abs(inner(&vvals, &xvals));
    if tangency > 1e-6 {
        return Err(GeometryError::NotTangent { residual: tangency });
    }

    let norm_val = lorentz_norm(&vvals);
    if norm_val == 0.0 {
        return Ok(x.clone());
    }
    let a = x.curvature().sqrt_neg();
    let n = v.lorentz_norm();
    let s = n * a;
    let c = s.cosh();
    let ratio = s.clone().sinh() / s;
    let coords = x
        .coords()
        .iter()
        .zip(v.vec())
        .map(|(xi, vi)| xi.clone() * c.clone() + vi.clone() * ratio.clone())
        .collect();
    Ok(LorentzPoint::new_unchecked(coords, x.curvature()))
}

/// Logarithmic map `d_L(x,y) (y - K<x,y>_L x) / |y - K<x,y>_L x|_L`.
/// Returns the exact zero tangent when `y` coincides with `x` (the formula is
/// 0/0 there).
pub fn log_map<S: Scalar>(
    x: &LorentzPoint<S>,
    y: &LorentzPoint<S>,
) -> Result<TangentVector<S>, GeometryError> {
    check_pair(x, y)?;
    let c = inner(x.coords(), y.coords());
    let arg_val = c.val() * x.curvature().k();
    if arg_val <= ACOSH_ARG_MIN {
        return Ok(TangentVector::zero(x.clone()));
    }
    let arg = c * x.curvature().k();
    let d = arg.clone().acosh_clamped();
    let u: Vec<S> = y
        .coords()
        .iter()
        .zip(x.coords())
        .map(|(yi, xi)| yi.clone() - xi.clone() * arg.clone())
        .collect();
    let scale = d / lorentz_norm(&u);
    let vec = u.into_iter().map(|ui| ui * scale.clone()).collect();
    Ok(TangentVector::new_unchecked(x.clone(), vec))
}

/// Spatial coordinates of the logarithmic map at the origin (the time
/// component of an origin-tangent is identically zero).
///
/// Uses the equivalent closed form `asinh(sqrt(-K)|s|) * s/|s|`, which is
/// better conditioned near the origin than the generic `acosh` route.
pub fn tangent_at_origin<S: Scalar>(y: &LorentzPoint<S>) -> Vec<S> {
    let s = y.spatial();
    let norm_val: f64 = math::sqrt(s.iter().map(|v| v.val() * v.val()).sum());
    if norm_val == 0.0 {
        return s.iter().map(|v| v.lit(0.0)).collect();
    }
    let a = y.curvature().sqrt_neg();
    let n = linalg::euclidean_norm(s);
    let u = n.clone() * a;
    // asinh(u) = ln(u + sqrt(u^2 + 1))
    let d = (u.clone() + (u.clone() * u.clone() + 1.0).sqrt()).ln();
    let scale = d / n;
    s.iter().map(|v| v.clone() * scale.clone()).collect()
}

fn check_pair<S: Scalar>(x: &LorentzPoint<S>, y: &LorentzPoint<S>) -> Result<(), GeometryError> {
    if x.ambient_dim() != y.ambient_dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: x.ambient_dim(),
            got: y.ambient_dim(),
        });
    }
    if x.curvature() != y.curvature() {
        return Err(GeometryError::CurvatureMismatch {
            left: x.curvature().k(),
            right: y.curvature().k(),
        });
    }
    Ok(())
}

/// Activation `h` inside the manifold-preserving linear layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Identity,
    Relu,
    /// `x * sigmoid(x)`.
    SigmoidGate,
}

impl Activation {
    pub fn apply<S: Scalar>(&self, x: &S) -> S {
        match self {
            Activation::Identity => x.clone(),
            Activation::Relu => x.relu(),
            Activation::SigmoidGate => x.silu(),
        }
    }
}

/// How the spatial output `phi` of the linear layer is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TransformMode {
    /// `phi = W · dropout(x)`.
    Dropout,
    /// `phi = lambda * sigmoid(v'x + b') * (W h(x) + b) / |W h(x) + b|`.
    #[default]
    Normalized,
}

/// Parameters of the manifold-preserving linear layer
/// `y = [sqrt(|phi|^2 - 1/K); phi]`.
#[derive(Clone, Debug)]
pub struct HyperbolicLinearParams<S> {
    /// `m x (n+1)` weight.
    pub w: Vec<Vec<S>>,
    /// Gate direction, length `n+1`.
    pub v: Vec<S>,
    /// Bias, length `m`.
    pub b: Vec<S>,
    /// Gate bias.
    pub b_prime: S,
    /// Gate scale, strictly positive.
    pub scale_lambda: f64,
    pub activation: Activation,
    pub mode: TransformMode,
    /// Multiplicative keep-mask over the ambient input (dropout). `None`
    /// means identity.
    pub dropout_mask: Option<Vec<f64>>,
}

/// Manifold-preserving linear layer. The time coordinate is reconstructed
/// from the spatial output, so the result satisfies the hyperboloid invariant
/// for any weights.
pub fn hyperbolic_linear<S: Scalar>(
    x: &LorentzPoint<S>,
    p: &HyperbolicLinearParams<S>,
) -> Result<LorentzPoint<S>, GeometryError> {
    assert!(p.scale_lambda > 0.0, "scale_lambda must be positive");
    let ambient = x.ambient_dim();
    if p.w.is_empty() || p.w[0].len() != ambient {
        return Err(GeometryError::DimensionMismatch {
            expected: ambient,
            got: p.w.first().map_or(0, Vec::len),
        });
    }
    let out = p.w.len();

    let phi: Vec<S> = match p.mode {
        TransformMode::Dropout => {
            let input: Vec<S> = match &p.dropout_mask {
                Some(mask) => {
                    assert_eq!(mask.len(), ambient, "dropout mask length");
                    x.coords()
                        .iter()
                        .zip(mask)
                        .map(|(c, &m)| c.clone() * m)
                        .collect()
                }
                None => x.coords().to_vec(),
            };
            linalg::matvec(&p.w, &input)
        }
        TransformMode::Normalized => {
            if p.v.len() != ambient {
                return Err(GeometryError::DimensionMismatch {
                    expected: ambient,
                    got: p.v.len(),
                });
            }
            if p.b.len() != out {
                return Err(GeometryError::DimensionMismatch {
                    expected: out,
                    got: p.b.len(),
                });
            }
            let activated: Vec<S> = x.coords().iter().map(|c| p.activation.apply(c)).collect();
            let dir = linalg::add(&linalg::matvec(&p.w, &activated), &p.b);
            let dir_norm_val: f64 = math::sqrt(dir.iter().map(|d| d.val() * d.val()).sum());
            if dir_norm_val == 0.0 {
                return Ok(LorentzPoint::origin_like(x.time(), out, x.curvature()));
            }
            let gate = (linalg::dot(&p.v, x.coords()) + p.b_prime.clone()).sigmoid()
                * p.scale_lambda;
            let scale = gate / linalg::euclidean_norm(&dir);
            dir.into_iter().map(|d| d * scale.clone()).collect()
        }
    };
    Ok(lift_to_manifold(&phi, x.curvature()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{gradcheck, DifferentiableLoss, DEFAULT_STEP, DEFAULT_TOLERANCE};
    use crate::params::{ParamSet, ParameterStore, Shape};
    use crate::rng::{DetRng, Stream};
    use alloc::vec;

    const K1: Curvature = Curvature(-1.0);

    fn pt(coords: &[f64]) -> LorentzPoint<f64> {
        LorentzPoint::try_new(coords.to_vec(), K1).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    // --- lorentz_inner -----------------------------------------------------

    #[test]
    fn inner_of_origin_is_one_over_k() {
        let o = [1.0, 0.0, 0.0];
        assert_eq!(lorentz_inner(&o, &o).unwrap(), -1.0);
    }

    #[test]
    fn inner_orthogonal_components() {
        assert_eq!(lorentz_inner(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn inner_direct_formula() {
        let s2 = 2f64.sqrt();
        let v = lorentz_inner(&[s2, 1.0, 0.0], &[s2, 0.0, 1.0]).unwrap();
        assert!(close(v, -2.0, 1e-12));
    }

    #[test]
    fn inner_rejects_mismatched_dims() {
        assert!(matches!(
            lorentz_inner(&[1.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inner_is_bilinear_and_symmetric() {
        let x = [1.3, 0.4, -0.2];
        let y = [2.0, 1.0, 0.5];
        let z = [1.1, -0.3, 0.8];
        let xy = lorentz_inner(&x, &y).unwrap();
        let yx = lorentz_inner(&y, &x).unwrap();
        assert!(close(xy, yx, 1e-15));
        // <x + z, y> = <x,y> + <z,y>
        let xz: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a + b).collect();
        let lhs = lorentz_inner(&xz, &y).unwrap();
        let rhs = xy + lorentz_inner(&z, &y).unwrap();
        assert!(close(lhs, rhs, 1e-12));
    }

    // --- lorentz_norm ------------------------------------------------------

    #[test]
    fn norm_euclidean_part_only() {
        assert!(close(lorentz_norm(&[0.0, 3.0, 4.0]), 5.0, 1e-12));
    }

    #[test]
    fn norm_of_timelike_vector_uses_absolute_value() {
        assert!(close(lorentz_norm(&[1.0, 0.0, 0.0]), 1.0, 1e-12));
    }

    #[test]
    fn norm_of_zero_is_zero() {
        assert_eq!(lorentz_norm(&[0.0, 0.0, 0.0]), 0.0);
    }

    // --- lift / euclid_to_lorentz -------------------------------------------

    #[test]
    fn lift_zero_gives_origin() {
        let p = lift_to_manifold(&[0.0, 0.0], K1);
        assert_eq!(p.coords(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn lift_known_values() {
        let p = lift_to_manifold(&[1.0, 0.0], K1);
        assert!(close(*p.time(), 2f64.sqrt(), 1e-12));
        let q = lift_to_manifold(&[3.0, 4.0], K1);
        assert!(close(*q.time(), 26f64.sqrt(), 1e-12));
        assert!(q.manifold_residual() < 1e-12);
    }

    #[test]
    fn euclid_lift_zero_is_origin() {
        let p = euclid_to_lorentz(&[0.0, 0.0], K1);
        assert_eq!(p.coords(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn euclid_lift_unit_vector() {
        let p = euclid_to_lorentz(&[1.0, 0.0], K1);
        assert!(close(*p.time(), 1.5430806348152437, 1e-9));
        assert!(close(p.spatial()[0], 1.1752011936438014, 1e-9));
        assert!(close(p.spatial()[1], 0.0, 1e-12));
    }

    #[test]
    fn euclid_lift_satisfies_identity() {
        let p = euclid_to_lorentz(&[0.7, -0.4, 0.2], K1);
        assert!(p.manifold_residual() < 1e-12);
    }

    #[test]
    fn euclid_lift_on_manifold_across_curvatures() {
        for &k in &[-0.25, -0.5, -1.0, -2.0, -4.0] {
            let curv = Curvature::new(k).unwrap();
            let p = euclid_to_lorentz(&[0.8, -0.3], curv);
            assert!(
                p.manifold_residual() < 1e-10,
                "K={k}: residual {}",
                p.manifold_residual()
            );
        }
    }

    // --- exp / log / distance ------------------------------------------------

    #[test]
    fn exp_of_zero_tangent_is_base() {
        let x = pt(&[2f64.sqrt(), 1.0, 0.0]);
        let v = TangentVector::zero(x.clone());
        let y = exp_map(&x, &v).unwrap();
        assert_eq!(y.coords(), x.coords());
    }

    #[test]
    fn exp_at_origin_closed_form() {
        let o = LorentzPoint::origin(2, K1);
        let v = TangentVector::try_new(o.clone(), vec![0.0, 1.0, 0.0]).unwrap();
        let y = exp_map(&o, &v).unwrap();
        assert!(close(y.coords()[0], 1.543081, 1e-6));
        assert!(close(y.coords()[1], 1.175201, 1e-6));
        assert!(close(y.coords()[2], 0.0, 1e-12));
    }

    #[test]
    fn exp_rejects_non_tangent() {
        let o = LorentzPoint::origin(2, K1);
        let bad = TangentVector::new_unchecked(o.clone(), vec![1.0, 0.0, 0.0]);
        assert!(matches!(
            exp_map(&o, &bad),
            Err(GeometryError::NotTangent { .. })
        ));
    }

    #[test]
    fn log_of_same_point_is_exact_zero() {
        let x = pt(&[2f64.sqrt(), 1.0, 0.0]);
        let v = log_map(&x, &x).unwrap();
        assert!(v.vec().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn log_inverts_exp_at_origin() {
        let o = LorentzPoint::origin(2, K1);
        let y = pt(&[1.5430806348152437, 1.1752011936438014, 0.0]);
        let v = log_map(&o, &y).unwrap();
        assert!(close(v.vec()[0], 0.0, 1e-9));
        assert!(close(v.vec()[1], 1.0, 1e-9));
        assert!(close(v.vec()[2], 0.0, 1e-9));
    }

    /// Builds a tangent at `x` from spatial components by solving the
    /// orthogonality constraint for the time component.
    fn make_tangent(x: &LorentzPoint<f64>, space: &[f64]) -> TangentVector<f64> {
        let dot: f64 = space.iter().zip(x.spatial()).map(|(a, b)| a * b).sum();
        let v0 = dot / x.time();
        let mut vec = vec![v0];
        vec.extend_from_slice(space);
        TangentVector::try_new(x.clone(), vec).unwrap()
    }

    #[test]
    fn exp_log_round_trip_random_tangents() {
        let mut rng = DetRng::new(11, Stream::Synth);
        for _ in 0..200 {
            let base_spatial: Vec<f64> = rng.normal_vec(3);
            let x = euclid_to_lorentz(&base_spatial, K1);
            let raw: Vec<f64> = rng.normal_vec(3);
            let mut v = make_tangent(&x, &raw);
            // Rescale to |v|_L <= 5.
            let n = v.lorentz_norm();
            if n > 5.0 {
                let scaled: Vec<f64> = v.vec().iter().map(|c| c * 5.0 / n).collect();
                v = TangentVector::try_new(x.clone(), scaled).unwrap();
            }
            let y = exp_map(&x, &v).unwrap();
            let back = log_map(&x, &y).unwrap();
            let norm = v.lorentz_norm();
            let tol = 1e-8 * math::fmax(1.0, norm);
            for (a, b) in back.vec().iter().zip(v.vec()) {
                assert!(close(*a, *b, tol), "round trip {a} vs {b} (tol {tol})");
            }
        }
    }

    #[test]
    fn log_exp_compose_to_sqrt_neg_k_scaling_off_default_curvature() {
        // With the standard closed forms kept verbatim, log(exp(v)) equals
        // sqrt(-K) * v; the pair is mutually inverse exactly at K = -1.
        let curv = Curvature::new(-0.25).unwrap();
        let o = LorentzPoint::origin_like(&0.0, 2, curv);
        let v = TangentVector::try_new(o.clone(), vec![0.0, 0.6, -0.2]).unwrap();
        let y = exp_map(&o, &v).unwrap();
        assert!(y.manifold_residual() < 1e-10);
        let back = log_map(&o, &y).unwrap();
        let a = curv.sqrt_neg();
        for (b, orig) in back.vec().iter().zip(v.vec()) {
            assert!(close(*b, a * orig, 1e-9), "{b} vs {}", a * orig);
        }
    }

    #[test]
    fn distance_examples() {
        let s2 = 2f64.sqrt();
        let x = pt(&[s2, 1.0, 0.0]);
        let y = pt(&[s2, 0.0, 1.0]);
        let d = geodesic_distance(&x, &y).unwrap();
        assert!(close(d, 1.3169578969248166, 1e-6));

        let o = LorentzPoint::origin(2, K1);
        let d2 = geodesic_distance(&o, &x).unwrap();
        assert!(close(d2, 0.881373587019543, 1e-6));
    }

    #[test]
    fn distance_to_self_is_clamp_floor() {
        let x = pt(&[2f64.sqrt(), 1.0, 0.0]);
        let d = geodesic_distance(&x, &x).unwrap();
        assert!(d >= 0.0 && d < 2e-6, "d = {d}");
    }

    #[test]
    fn distance_axioms_on_random_triples() {
        let mut rng = DetRng::new(3, Stream::Synth);
        for _ in 0..200 {
            let a = euclid_to_lorentz(&rng.normal_vec(3), K1);
            let b = euclid_to_lorentz(&rng.normal_vec(3), K1);
            let c = euclid_to_lorentz(&rng.normal_vec(3), K1);
            let dab = geodesic_distance(&a, &b).unwrap();
            let dba = geodesic_distance(&b, &a).unwrap();
            let dac = geodesic_distance(&a, &c).unwrap();
            let dcb = geodesic_distance(&c, &b).unwrap();
            assert!(close(dab, dba, 1e-12));
            assert!(dab >= 0.0);
            assert!(dab <= dac + dcb + 1e-9, "triangle violated");
        }
    }

    #[test]
    fn similarity_examples() {
        let s2 = 2f64.sqrt();
        let x = pt(&[s2, 1.0, 0.0]);
        let y = pt(&[s2, 0.0, 1.0]);
        let s = lorentz_similarity(&x, &y).unwrap();
        assert!(close(s, 0.2679491924311227, 1e-6)); // 2 - sqrt(3)
        let self_sim = lorentz_similarity(&x, &x).unwrap();
        assert!(close(self_sim, 1.0, 1e-5));
        assert!(self_sim <= 1.0);
    }

    #[test]
    fn similarity_strictly_decreasing_in_distance() {
        let o = LorentzPoint::origin(2, K1);
        let mut prev = f64::INFINITY;
        for i in 1..10 {
            let p = euclid_to_lorentz(&[0.4 * i as f64, 0.0], K1);
            let s = lorentz_similarity(&o, &p).unwrap();
            assert!(s < prev && s > 0.0);
            prev = s;
        }
    }

    #[test]
    fn tangent_at_origin_matches_log_map() {
        let mut rng = DetRng::new(5, Stream::Synth);
        for _ in 0..50 {
            let y = euclid_to_lorentz(&rng.normal_vec(4), K1);
            let o = LorentzPoint::origin(4, K1);
            let via_log = log_map(&o, &y).unwrap();
            let direct = tangent_at_origin(&y);
            assert!(close(via_log.vec()[0], 0.0, 1e-9));
            for (a, b) in via_log.vec()[1..].iter().zip(&direct) {
                assert!(close(*a, *b, 1e-9), "{a} vs {b}");
            }
        }
    }

    // --- hyperbolic linear ---------------------------------------------------

    fn identity_phi_params(rows: Vec<Vec<f64>>) -> HyperbolicLinearParams<f64> {
        let cols = rows[0].len();
        HyperbolicLinearParams {
            w: rows,
            v: vec![0.0; cols],
            b: vec![],
            b_prime: 0.0,
            scale_lambda: 1.0,
            activation: Activation::Identity,
            mode: TransformMode::Dropout,
            dropout_mask: None,
        }
    }

    #[test]
    fn linear_identity_phi_zero_output_is_origin() {
        let x = pt(&[2f64.sqrt(), 1.0, 0.0]);
        let p = identity_phi_params(vec![vec![0.0; 3], vec![0.0; 3]]);
        let y = hyperbolic_linear(&x, &p).unwrap();
        assert_eq!(y.coords(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn linear_identity_phi_direct_evaluation() {
        // W x = (1, 0) -> y = (sqrt(2), 1, 0)
        let x = pt(&[2f64.sqrt(), 1.0, 0.0]);
        let p = identity_phi_params(vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]]);
        let y = hyperbolic_linear(&x, &p).unwrap();
        assert!(close(y.coords()[0], 2f64.sqrt(), 1e-12));
        assert!(close(y.coords()[1], 1.0, 1e-12));
        assert!(close(y.coords()[2], 0.0, 1e-12));
    }

    #[test]
    fn linear_output_always_on_manifold() {
        let mut rng = DetRng::new(9, Stream::Synth);
        for trial in 0..200 {
            let n = 2 + (trial % 5);
            let m = 2 + ((trial / 5) % 4);
            let x = euclid_to_lorentz(&rng.normal_vec(n), K1);
            let w: Vec<Vec<f64>> = (0..m).map(|_| rng.normal_vec(n + 1)).collect();
            let p = HyperbolicLinearParams {
                w,
                v: rng.normal_vec(n + 1),
                b: rng.normal_vec(m),
                b_prime: rng.normal(),
                scale_lambda: 1.0,
                activation: Activation::Identity,
                mode: TransformMode::Normalized,
                dropout_mask: None,
            };
            let y = hyperbolic_linear(&x, &p).unwrap();
            assert!(
                y.manifold_residual() < 1e-7,
                "residual {}",
                y.manifold_residual()
            );
            assert!(y.time().val() > 0.0);
        }
    }

    #[test]
    fn linear_zero_direction_returns_origin_in_normalized_mode() {
        let x = pt(&[2f64.sqrt(), 1.0, 0.0]);
        let p = HyperbolicLinearParams {
            w: vec![vec![0.0; 3], vec![0.0; 3]],
            v: vec![0.1, 0.2, 0.3],
            b: vec![0.0, 0.0],
            b_prime: 0.0,
            scale_lambda: 1.0,
            activation: Activation::Identity,
            mode: TransformMode::Normalized,
            dropout_mask: None,
        };
        let y = hyperbolic_linear(&x, &p).unwrap();
        assert_eq!(y.coords(), &[1.0, 0.0, 0.0]);
    }

    // --- gradients through the geometric ops ---------------------------------

    /// Distance + similarity + linear layer pipeline driven purely from
    /// parameters, for gradient verification.
    struct GeomLoss;

    impl DifferentiableLoss for GeomLoss {
        fn loss<S: Scalar>(&self, params: &ParamSet<S>) -> S {
            let curv = Curvature::default();
            let a = params.vec("a").expect("a");
            let b = params.vec("b").expect("b");
            let w = params.rows("w").expect("w");
            let vg = params.vec("vg").expect("vg");
            let bb = params.vec("bb").expect("bb");
            let bp = params.scalar("bp").expect("bp");

            let x = euclid_to_lorentz(a, curv);
            let y = euclid_to_lorentz(b, curv);
            let d = geodesic_distance(&x, &y).expect("distance");
            let sim = lorentz_similarity(&x, &y).expect("similarity");

            let p = HyperbolicLinearParams {
                w,
                v: vg.to_vec(),
                b: bb.to_vec(),
                b_prime: bp,
                scale_lambda: 1.0,
                activation: Activation::Identity,
                mode: TransformMode::Normalized,
                dropout_mask: None,
            };
            let z = hyperbolic_linear(&x, &p).expect("linear");
            let t = tangent_at_origin(&z);

            // Weight the tangent components unevenly and add a linear term so
            // the loss is sensitive to the output direction, not only to its
            // norm (the normalized transform controls the norm with the gate
            // alone, which would leave W with an exactly-zero gradient).
            let mut acc = d * sim;
            for (i, c) in t.iter().enumerate() {
                acc = acc + c.clone() * c.clone() * (0.5 + i as f64) + c.clone() * 0.25;
            }
            acc
        }
    }

    #[test]
    fn geometry_ops_pass_gradcheck() {
        let mut rng = DetRng::new(21, Stream::Synth);
        let mut store = ParameterStore::new();
        store.insert("a", Shape::vector(3), rng.normal_vec(3));
        store.insert("b", Shape::vector(3), rng.normal_vec(3));
        store.insert("w", Shape::matrix(2, 4), rng.normal_vec(8));
        store.insert("vg", Shape::vector(4), rng.normal_vec(4));
        store.insert("bb", Shape::vector(2), rng.normal_vec(2));
        store.insert("bp", Shape::scalar(), rng.normal_vec(1));
        let report = gradcheck(&store, &GeomLoss, DEFAULT_STEP, DEFAULT_TOLERANCE).unwrap();
        assert!(report.passed(), "{report}");
    }
}
