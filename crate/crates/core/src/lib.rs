//! Normalized ground states of the singular polyharmonic Schrödinger
//! equation `(-Δ)^m u + μ|y|^{-2m} u + λu = g(u)` with prescribed mass.

// `!(x > 0.0)` rejects NaN on purpose; index loops mirror the stencil algebra.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::excessive_precision
)]

pub mod banded;
pub mod curlcurl;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod fiber;
pub mod field;
pub mod model;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use model::{Nonlinearity, ProblemSpec};
