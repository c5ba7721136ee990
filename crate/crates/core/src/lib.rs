//! Numerical Finsler geometry.
//!
//! Metrics are defined by expressions in [`expr`] or built-in families in
//! [`metric`]; [`jet`] supplies the derivatives, [`tensor`] the pointwise
//! tensors of the Chern connection, [`indicatrix`] the sphere quadrature,
//! [`averaging`] the averaged Riemannian metric, [`homotopy`] the
//! interpolating family and [`transport`] the parallel-transport integrator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod cli;
pub mod error;
pub mod expr;
pub mod homotopy;
pub mod indicatrix;
pub mod jet;
pub mod metric;
pub mod report;
pub mod tensor;
pub mod transport;

pub use error::{Error, Result};
