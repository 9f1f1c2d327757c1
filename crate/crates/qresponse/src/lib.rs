//! Exact-diagonalization response theory for finite quantum systems.
//!
//! The linear-algebra layer and the closed-form reference models are generic
//! over [`Real`]; the physics layers work in `f64`.

pub mod analytic;
pub mod correlators;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod thermal;
pub mod tolerance;
pub mod workstats;

pub use error::{Error, Result};
pub use scalar::Real;

/// Complex scalar used by the physics layers.
pub type C64 = num_complex::Complex<f64>;
/// Double-precision dense complex matrix.
pub type Matrix = linalg::CMatrix<f64>;
/// Double-precision hermitian operator.
pub type Operator = linalg::Hermitian<f64>;
/// Double-precision eigendecomposition.
pub type Eigen = linalg::EigenSystem<f64>;
/// Monotone-function tag in double precision.
pub type FTag = linalg::MonotoneFn<f64>;
