//! Dense complex linear algebra, generic over the real scalar type.

pub mod divdiff;
mod eigen;
mod kf;
mod matrix;
#[cfg(test)]
pub(crate) mod testutil;

pub use eigen::{eig_hermitian, matrix_function, EigenSystem};
pub use kf::{apply_kf, checked_weights, MonotoneFn, DEGENERATE_WEIGHT_TOL};
pub use matrix::{pauli, CMatrix, Hermitian, HERMITIAN_TOL};
