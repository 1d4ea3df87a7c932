//! Electrostatic imaging of an inclusion with a generalized impedance
//! boundary condition.

pub mod error;
pub mod forward;
pub mod fourier;
pub mod impedance;
pub mod io;
pub mod operator;
pub mod sampling;

pub use error::{Error, Result};
pub use num_complex::Complex64;
