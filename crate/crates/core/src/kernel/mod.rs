//! Deterministic 64-bit numeric substrate: matrices, dense layers, Adam and
//! a finite-difference gradient oracle.

mod adam;
mod dense;
mod finite_diff;
mod matrix;

pub use adam::{adam_step, AdamConfig, AdamState, GroupUpdate};
pub use dense::{dense_backward, dense_forward, sigmoid, Activation, DenseGrads, DenseLayer};
pub use finite_diff::{finite_difference_check, relative_error, FiniteDifferenceReport};
pub use matrix::{elementwise_product, gaussian_init, Matrix};
