//! Spectral simulation of interacting closed planar interfaces moving by
//! curvature, constant normal growth and nonlocal kernel forcing.
//!
//! Curves are stored on the uniform periodic grid `x_j = -π + 2πj/M` and
//! evolved in tangent-angle form with an exponential integrator.

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod nonlocal;
pub mod solver;
pub mod special;
pub mod spectral;

pub use error::{DiagnosticError, GeometryError, KernelError, NonlocalError, SolverError};
pub use geometry::{AngleField, Curve, Vec2};
pub use kernels::KernelSpec;
pub use spectral::PeriodicField;
