// `!(x >= 0.0)` is used deliberately so that NaN fails validation.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::needless_range_loop
)]

pub mod chebyshev;
pub mod cli;
pub mod commutator;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod greens;
pub mod lattice_operator;
pub mod linalg;
pub mod quadrature;

pub use error::{Error, Result};
