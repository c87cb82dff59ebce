//! Numerical laboratory for farthest points, remotal sets and summability-window
//! (`alpha`/`beta`) statistical convergence in `(R^d, l_p)`.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod compactness;
pub mod error;
pub mod gauge;
pub mod geometry;
pub mod seqlab;
pub mod windows;

pub use error::{Error, Result};
