//! Sparse + low-rank matrix decomposition, robust subspace tracking, and
//! matrix completion, with synthetic data generators and a Monte-Carlo
//! benchmark harness.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mc;
pub mod norst;
pub mod rng;
pub mod rpca;
pub mod sparse;
pub mod synth;

pub use error::{Error, Result};
