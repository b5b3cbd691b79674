//! Φ-variation of sample paths: variation-function catalog, metric entropy
//! and chaining, the series condition for finite Φ-variation, Hermite
//! kernels and constants, path simulation, and grid variation functionals.

pub mod conditions;
pub mod error;
pub mod funcs;
pub mod hermite;
pub mod metric;
pub mod quad;
pub mod simulate;
pub mod variation;

pub use error::{Error, Result};
pub use funcs::VariationFunction;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
