//! Dense complex linear algebra: matrix type, SVD, Cholesky-based
//! log-determinant and solve, and a Hermitian eigensolver.

mod chol;
mod eigh;
mod matrix;
mod svd;

pub use chol::{cholesky, logdet_psd, solve_psd};
pub use eigh::{eigh, hermitian_sqrt};
pub use matrix::{dot_conj, norm_sqr, CMatrix, C64};
pub use svd::{svd, Svd};

#[cfg(test)]
mod properties;
