//! Clique complexes, combinatorial Laplacians, and sampled spectral
//! estimators driven by an emulated phase-estimation channel.

pub mod complex;
pub mod emulator;
pub mod error;
pub mod estimators;
pub mod homology;
pub mod io;
pub mod pipeline;
pub mod seed;
pub mod sparse_access;
pub mod spectrum;

pub use error::{Error, Result};
