//! Tensor formats: dense, canonical polyadic (CP), Tucker and tensor train.
//!
//! Modes are 0-based in this API. Every format linearizes with the first
//! index fastest, so `DenseTensor::values` is `vec(X)` and the mode-0
//! unfolding of a two-mode tensor is the matrix itself.

mod cp;
mod dense;
pub mod io;
mod tt;
mod tucker;

pub use cp::{cp_als, cp_als_run, CpAlsOptions, CpAlsRun, CpTensor};
pub use dense::DenseTensor;
pub use tt::{Carriage, TtTensor};
pub use tucker::{hosvd, Hosvd, HosvdTarget, TuckerTensor};

pub(crate) use dense::apply_mode;

use crate::error::{Error, Result};

/// A shape viewed as `[left, n, right]` around one mode.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Shape {
    pub left: usize,
    pub n: usize,
    pub right: usize,
}

impl Shape {
    pub fn split(shape: &[usize], mode: usize) -> Self {
        Self {
            left: shape[..mode].iter().product(),
            n: shape[mode],
            right: shape[mode + 1..].iter().product(),
        }
    }
}

pub(crate) fn check_mode(mode: usize, ndim: usize) -> Result<()> {
    if mode >= ndim {
        return Err(Error::ModeOutOfRange { index: mode, len: ndim });
    }
    Ok(())
}

pub(crate) fn check_same_shape(a: &[usize], b: &[usize]) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("shapes {a:?} and {b:?} differ")));
    }
    Ok(())
}
