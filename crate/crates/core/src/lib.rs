// Negated float comparisons are deliberate: NaN must land on the failing side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Escape-time computation, rendering and transition profiling of
//! quasi-Mandelbrot sets: the parameters `c` for which the zero orbit of a
//! perturbed quadratic map on the plane stays bounded.

pub mod algebra;
pub mod cli;
pub mod engine;
pub mod error;
pub mod maps;
pub mod render;
pub mod sweep;
pub mod validation;

pub use error::{Error, Result};
