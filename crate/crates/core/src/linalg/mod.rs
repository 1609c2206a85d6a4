//! Dense linear algebra kernels used by the tensor formats and solvers.

mod chol;
mod eigen;
mod matrix;
mod qr;
mod svd;

pub use chol::solve_spd_right;
pub use eigen::{symmetric_eigen, SymmetricEigen};
pub use matrix::{dot, kron, norm2, Matrix};
pub use qr::{qr, Qr};
pub use svd::{svd, truncation_rank, Svd};
