//! Discretized geometric measure theory in the plane.
//!
//! Points live on dyadic grids of the box `[-2,2)^2`, lines are parametrized
//! by `(theta, r)` with `theta` in revolutions, and measures are finite sums of
//! weighted grid cells. On top of that the crate provides weighted point-tube
//! incidences, a pixel-driven X-ray transform with its exact discrete adjoint,
//! homogeneous Sobolev norms, Riesz energies (direct and Fourier side), dyadic
//! Hausdorff content by tree dynamic programming, and generators for
//! Furstenberg, slicing and radial projection configurations.

pub mod content;
pub mod error;
pub mod geometry;
pub mod incidence;
pub mod measures;
pub mod report;
pub mod scenarios;
pub mod spectral;
pub mod suite;

pub use error::{Error, Result};
pub use geometry::{DyadicSquare, DyadicTube, LineParam, Point, Root, Tube};
pub use measures::{AtomMeasure, LineParamMeasure, PlanarAtomMeasure, PointSet};
