//! Grid geometry: flat tori (spectral) and toric ℂP¹ (Chebyshev).

pub mod diffeo;
pub mod grid;
pub mod linalg;
pub mod serialize;
pub mod toric;
pub mod torus;
pub mod trig;
