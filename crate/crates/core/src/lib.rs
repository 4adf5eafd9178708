//! Variable-order fractional derivatives and integrals with Mittag-Leffler
//! kernels, an implicit solver for the associated Caputo-type equation, and
//! numerical checks of the operators' analytic properties.

// `!(x > 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod expr;
pub mod fde;
pub mod grid;
pub mod kernel;
pub mod mlf;
pub mod operators;
pub mod quad;
pub mod special;

pub use error::{FracError, Result};
