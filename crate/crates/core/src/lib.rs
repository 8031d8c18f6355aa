//! Solution branches and their stability for strain-gradient regularized,
//! non-convex, finite-strain elasticity.
//!
//! The crate discretizes the one-dimensional double-well model and the
//! three-dimensional three-well (cubic-to-tetragonal) model with smooth
//! B-spline spaces, solves the discrete equilibrium equations with Newton's
//! method, tracks solution branches over the length-scale parameter, and
//! classifies each equilibrium through the lower end of the Hessian spectrum.

pub mod continuation;
mod dd;
pub mod discretization;
pub mod error;
pub mod io;
pub mod material;
pub mod solvers;
pub mod spline;

pub use error::{Error, Result};
