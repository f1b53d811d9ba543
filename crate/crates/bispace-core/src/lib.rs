//! Dual-space graph representation learning on Euclidean and Lorentz-hyperbolic
//! geometry.
//!
//! The crate is organized around a small set of layers:
//!
//! * [`geometry`] — the Lorentz (hyperboloid) model: inner products, exp/log
//!   maps, geodesic distances, similarities and the manifold-preserving linear
//!   layer.
//! * [`tape`] + [`scalar`] — a reverse-accumulation gradient engine over a
//!   fixed scalar op set. Every formula in this crate is written once, generic
//!   over [`scalar::Scalar`], and evaluated either on plain `f64` (inference,
//!   finite differences) or on tape variables (training).
//! * [`hypergraph`] / [`euclid`] — the energy-driven hyperbolic message-passing
//!   branch and its Euclidean mirror.
//! * [`dsi`] — cross-space attention between the two branches.
//! * [`objective`] — hyperbolic classifier, top-k bag scoring, BCE and the
//!   text-guided contrastive loss.
//! * [`model`] / [`train`] / [`metrics`] — end-to-end assembly, the training
//!   loop and frame-level AP/AUC evaluation.
//! * [`synth`] — deterministic synthetic datasets and text banks for desk-scale
//!   experiments.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the companion `bispace`
//! crate carries file formats and the CLI.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod adam;
pub mod data;
pub mod dsi;
pub mod euclid;
pub mod fusion;
pub mod geometry;
pub mod gradcheck;
pub mod hypergraph;
pub mod linalg;
mod math;
pub mod metrics;
pub mod model;
pub mod objective;
pub mod params;
pub mod rng;
pub mod scalar;
pub mod synth;
pub mod tape;
pub mod train;

pub use geometry::{Curvature, LorentzPoint, TangentVector};
pub use params::ParameterStore;
pub use scalar::Scalar;
pub use tape::{Tape, Var};
