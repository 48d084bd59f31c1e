//! Numerical toolkit for the order-6 CR umbilical obstruction `det A₃(ρ)` on
//! real hypersurfaces in `ℂ²`, evaluated with truncated Taylor arithmetic.

// `!(x > 0.0)` is used on purpose so that NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cr;
pub mod jet;
pub mod oracle;
pub mod output;
pub mod scanner;
pub mod surface;
pub mod verify;

pub use num_complex::Complex64;
