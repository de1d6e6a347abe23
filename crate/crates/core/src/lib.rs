pub mod bounds;
pub mod decomposition;
pub mod error;
pub mod harness;
pub mod esseen;
pub mod lattice;
pub mod linalg;
pub mod operator_algebra;
pub mod scalar;
pub mod spectral;
pub mod states;

pub use error::{Error, Result};

/// Scalar used by the physics layers.
pub type Real = f64;
/// Complex scalar used by the physics layers.
pub type Complex64 = num_complex::Complex<f64>;
/// Dense complex matrix over `f64`.
pub type Matrix = linalg::CMatrix<f64>;
