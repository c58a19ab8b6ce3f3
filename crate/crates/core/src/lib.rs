//! Numerical kernels for grid-based PDE codes.
//!
//! The crate covers reference elements and quadrature, curved element
//! geometries with full Jacobian algebra, local finite elements (including
//! Raviart-Thomas on prisms and pyramids and bubble-enriched Lagrange
//! elements), a sparsity-pattern pipeline feeding a block compressed-row
//! matrix, an SVG spy writer for nested matrices, and small dense and
//! multidimensional-array primitives.

pub mod checks;
pub mod dense;
pub mod error;
pub mod geometry;
pub mod localfe;
pub mod md;
pub mod quadrature;
pub mod refelem;
pub mod sparse;

pub use error::{Error, Result};

/// Library version, shared with the C ABI.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
