//! Numerical laboratory for minimal Lagrangian connections on closed
//! oriented surfaces.
//!
//! The mesh side discretizes the coupled curvature equation for a conformal
//! factor together with a closed 1-form and a cubic differential, and solves
//! it by minimizing a strictly convex functional. The chart side evaluates
//! connections, curvature and their identities with exact truncated Taylor
//! arithmetic.

pub mod chart;
pub mod cli;
pub mod cubic;
pub mod dec;
pub mod error;
pub mod hodge;
pub mod io;
pub mod mesh;
pub mod solver;

pub use error::{ErrorClass, MlcError, Result};
