//! Quasi-entropies, monotone metrics and equality-condition batteries for
//! finite-dimensional operator algebras.

pub mod channels;
pub mod equality;
pub mod error;
pub mod functions;
pub mod json;
pub mod linalg;
pub mod metrics;
pub mod quadrature;
pub mod quasi;
pub mod random;
pub mod structure;

pub use error::{Error, ErrorClass, Result};
