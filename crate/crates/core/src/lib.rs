//! Numerical laboratory for inviscid SQG on the upper half-plane with a
//! homogeneous Dirichlet condition on the boundary.

pub mod biot_savart;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod field;
pub mod geometry;
pub mod par;
pub mod profiles;
pub mod quadrature;
pub mod stats;

pub use error::{Result, SqgError};
pub use geometry::Point;
