//! Coupled moment maps and residual systems.

pub mod identity;
pub mod mu_p;
pub mod ccsck;
pub mod kym;
pub mod dhym;
pub mod graph;
