//! Exponential-sum approximation of `ξ^{-α}` and its use for applying
//! fractional powers of Kronecker-sum operators to dense, CP, Tucker and
//! tensor-train right-hand sides.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the precision.

pub mod bench;
pub mod error;
pub mod expsum;
pub mod linalg;
pub mod problems;
pub mod scalar;
pub mod solver;
pub mod special;
pub mod tensor;

pub use error::{Error, Result};
pub use expsum::{total_error_bound, BoundForm, ExpSum, ExpSumParams};
pub use linalg::Matrix;
pub use scalar::Scalar;
pub use solver::{
    oracle_apply, solve_cp, solve_dense, solve_dense_direct, solve_tt, solve_tucker, KroneckerSum, SolveReport,
};
pub use tensor::{CpTensor, DenseTensor, TtTensor, TuckerTensor};

pub type ExpSum64 = ExpSum<f64>;
pub type ExpSum32 = ExpSum<f32>;
pub type ExpSumParams64 = ExpSumParams<f64>;
pub type ExpSumParams32 = ExpSumParams<f32>;
pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type DenseTensor64 = DenseTensor<f64>;
pub type DenseTensor32 = DenseTensor<f32>;
pub type CpTensor64 = CpTensor<f64>;
pub type CpTensor32 = CpTensor<f32>;
pub type TuckerTensor64 = TuckerTensor<f64>;
pub type TuckerTensor32 = TuckerTensor<f32>;
pub type TtTensor64 = TtTensor<f64>;
pub type TtTensor32 = TtTensor<f32>;
pub type KroneckerSum64 = KroneckerSum<f64>;
pub type KroneckerSum32 = KroneckerSum<f32>;
