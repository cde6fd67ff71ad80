//! Generic one-dimensional numerics shared by the coverage and solver code.

pub mod quadrature;
pub mod roots;

pub use quadrature::{integrate, Estimate, QuadratureOptions};
pub use roots::{brent_minimize, brent_root, Minimum, Root};
