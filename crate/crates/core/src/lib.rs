//! Numerical laboratory for log-concave measures in dimension one to three:
//! densities with exact derivatives, quadrature and sampling, moments and
//! isotropic position, spectral gaps and dual-norm identities, isoperimetric
//! profiles, stochastic localization, and exact sections of convex bodies.

pub mod check;
pub mod density;
pub mod error;
pub mod grid;
pub mod isoperimetry;
pub mod linalg;
pub mod localization;
pub mod moments;
pub mod quadrature;
pub mod slicing;
pub mod spectral;
pub mod spec;

pub use density::Density;
pub use error::{Error, Result};
pub use grid::Grid;
