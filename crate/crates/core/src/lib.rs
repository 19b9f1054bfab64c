//! Supervised hashing with boosted decision trees.
//!
//! Training alternates two steps per bit: infer the bit's binary codes by
//! block graph-cut descent on a pairwise energy ([`inference`]), then fit
//! a boosted tree ensemble to reproduce those codes ([`boosting`]). The
//! fitted function's outputs replace the inferred codes before the next
//! bit is inferred ([`trainer`]). Retrieval runs in Hamming space
//! ([`eval`]).
//!
//! Data-parallel loops run on rayon when the `parallel` feature is on (the
//! default) and the caller asks for [`Parallelism::Parallel`]; results are
//! identical in either mode.

pub mod blocks;
pub mod boosting;
pub mod data;
pub mod error;
pub mod eval;
pub mod inference;
pub mod io;
pub mod par;
pub mod seed;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
pub use par::Parallelism;
