//! Coupled moment-map equations for tuples of Kähler metrics: a pointwise
//! exterior-algebra kernel, grid geometry on flat tori and toric ℂP¹,
//! residuals of the coupled equations, the obstruction functionals, and
//! solvers.

pub mod cli;
pub mod error;
pub mod exterior;
pub mod functionals;
pub mod geometry;
pub mod moment;
pub mod solvers;
pub mod tol;

pub use error::{Error, Result};
