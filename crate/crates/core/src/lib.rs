//! Normalized Grassmann manifolds: normalizations of the space of m-planes in
//! real projective n-space, their fundamental tensor λ, the induced metric,
//! curvature and Ricci tensors, the polar normalization of a quadric and the
//! flat normalization by a fixed subspace.

pub mod cli;
pub mod connection;
pub mod cross_ratio;
pub mod error;
pub mod io;
pub mod linalg;
pub mod normalization;
pub mod polar;
pub mod projective;
pub mod sampling;
pub mod segre_affine;

pub use error::{GeomError, Result};
