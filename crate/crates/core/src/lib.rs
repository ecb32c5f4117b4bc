// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod basis;
pub mod cli;
pub mod element;
pub mod error;
pub mod face;
pub mod global;
pub mod mesh;
pub mod quadrature;
#[cfg(test)]
mod testing;

pub use error::{Result, VemError};
