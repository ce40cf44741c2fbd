//! Chart-based almost complex geometry: exact exterior calculus on
//! expression-defined fields, Nijenhuis tensors, compatibility
//! obstructions and jet-level symbol computations.

pub mod catalog;
pub mod cli;
pub mod error;
pub mod exprlang;
pub mod fields;
pub mod linalg;
pub mod localsymp;
pub mod obstruction;
pub mod oracle;
pub mod pointwise;
pub mod random;
pub mod report;
pub mod suite;

pub use error::{Error, Result};
