//! Numerical certification of Hamiltonian stationary Lagrangian surfaces in the
//! complex space forms C², CP²(4) and CH²(-4).
//!
//! The crate evaluates explicit immersions (or their horizontal lifts) with
//! truncated Taylor arithmetic, computes their extrinsic and intrinsic geometry
//! pointwise, and turns the resulting identities into pass/fail checks with
//! sup-residuals over a sample grid.
// Tensor code reads better with explicit indices; `!(x < tol)` is how NaN fails a check.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod ambient;
pub mod catalog;
pub mod checks;
pub mod cli;
pub mod error;
pub mod jets;
pub mod surface;
pub mod variation;

pub use error::{HslError, Result};
