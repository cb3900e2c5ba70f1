//! Stochastic Galerkin systems of random descriptor systems, Hardy-norm
//! basis pruning and Krylov model order reduction.

pub mod basis;
pub mod circuits;
pub mod descriptor;
pub mod error;
pub mod galerkin;
pub mod hardy;
pub mod mor;
pub mod mtx;
pub mod sparse;
pub mod sparsify;

pub use error::{Error, Result};
