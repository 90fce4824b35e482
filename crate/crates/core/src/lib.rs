//! Regular simplicial search.
//!
//! A simplex-type derivative-free optimizer that keeps its simplex regular at
//! every iteration: the worst vertex is reflected isometrically through the
//! opposite face when that buys a sufficient decrease, and otherwise the whole
//! simplex is shrunk uniformly toward its best vertex. Because the shape never
//! degrades, the radius `δ_k` fully describes the geometry and the sharp
//! linear interpolation/extrapolation error bounds apply at every step.
//!
//! The crate is organised as:
//!
//! - [`simplex`]: exact regular-simplex geometry (construction, reflection,
//!   shrinking, regularity diagnostics).
//! - [`interp`]: Lagrange coefficients, simplex gradients, the signed
//!   second-moment matrix `G`, the sharp error bounds and their worst-case
//!   quadratics, and the `μ` sharpness certificate.
//! - [`objective`]: the [`Objective`](objective::Objective) contract and a
//!   registry of test functions with certified smoothness metadata.
//! - [`solver`]: the search itself plus the reflection-only baseline, with
//!   per-iteration traces.
//! - [`complexity`]: worst-case complexity constants, predicted iteration
//!   bounds and post-hoc trace auditors.
//! - [`experiments`]: the scaling-experiment runner and its CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod complexity;
pub mod error;
pub mod experiments;
pub mod interp;
pub mod objective;
pub mod simplex;
pub mod solver;

pub use error::{Error, Result};
pub use simplex::{make_regular_simplex, Point, RegularityReport, Simplex};
