//! Inspector-executor fusion of sparse kernel pairs.
//!
//! Two sparse kernels with loop-carried dependencies (say an incomplete
//! Cholesky factorization followed by a triangular solve) are scheduled
//! together: the inspector builds both dependence DAGs plus the
//! cross-kernel dependence relation and partitions the joint iteration
//! space into barrier-separated s-partitions of independent w-partitions.
//! The executor then runs that schedule on a thread pool.

pub mod bench;
pub mod cli;
pub mod dag;
pub mod error;
pub mod executor;
pub mod fixtures;
pub mod kernels;
pub mod lbc;
pub mod msp;
pub mod sparse;

pub use error::{Error, Result};
