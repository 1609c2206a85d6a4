use rayon::prelude::*;

use super::{check_mode, Shape};
use crate::error::{Error, Result};
use crate::linalg::{norm2, svd, Matrix};
use crate::scalar::Scalar;

/// Dense tensor stored with the first index varying fastest, so that
/// `values` is exactly `vec(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<T: Scalar> {
    shape: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> DenseTensor<T> {
    pub fn new(shape: Vec<usize>, values: Vec<T>) -> Result<Self> {
        validate_shape(&shape)?;
        let n = shape.iter().product::<usize>();
        if values.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "shape {shape:?} needs {n} values, got {}",
                values.len()
            )));
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        validate_shape(&shape)?;
        let n = shape.iter().product();
        Ok(Self {
            shape,
            values: vec![T::zero(); n],
        })
    }

    /// Fills the tensor by evaluating `f` at every multi-index, in storage order.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        validate_shape(&shape)?;
        let n: usize = shape.iter().product();
        let mut values = Vec::with_capacity(n);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..n {
            values.push(f(&idx));
            increment(&mut idx, &shape);
        }
        Ok(Self { shape, values })
    }

    /// `u₁ ⊗ … ⊗ u_d` arranged as a tensor (entry `Π_i u_i[j_i]`).
    pub fn outer(vectors: &[&[T]]) -> Result<Self> {
        let shape: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
        validate_shape(&shape)?;
        let mut values = vec![T::one()];
        for v in vectors {
            let mut next = Vec::with_capacity(values.len() * v.len());
            for &vi in v.iter() {
                next.extend(values.iter().map(|&x| x * vi));
            }
            values = next;
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut off = 0;
        let mut stride = 1;
        for (&i, &n) in idx.iter().zip(&self.shape) {
            debug_assert!(i < n);
            off += i * stride;
            stride *= n;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.values[self.offset(idx)]
    }

    pub fn frobenius_norm(&self) -> T {
        norm2(&self.values)
    }

    pub fn scale(&mut self, s: T) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    pub fn scaled(mut self, s: T) -> Self {
        self.scale(s);
        self
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "shapes {:?} and {:?} differ",
                self.shape, other.shape
            )));
        }
        Ok(Self {
            shape: self.shape.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// `‖self − other‖_F / ‖other‖_F`.
    pub fn relative_error(&self, reference: &Self) -> Result<T> {
        let diff = self.sub(reference)?;
        Ok(diff.frobenius_norm() / reference.frobenius_norm())
    }

    /// Mode-`mode` unfolding (0-based): an `n_mode × (N / n_mode)` matrix
    /// whose row `j` holds every entry with index `j` in that mode. Columns
    /// follow the remaining indices in storage order.
    pub fn unfold(&self, mode: usize) -> Result<Matrix<T>> {
        check_mode(mode, self.ndim())?;
        let s = Shape::split(&self.shape, mode);
        let mut out = vec![T::zero(); self.values.len()];
        for r in 0..s.right {
            for a in 0..s.n {
                let src = &self.values[(a + s.n * r) * s.left..][..s.left];
                for (l, &v) in src.iter().enumerate() {
                    out[a + s.n * (l + s.left * r)] = v;
                }
            }
        }
        Matrix::from_col_major(s.n, s.left * s.right, out)
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(m: &Matrix<T>, mode: usize, shape: Vec<usize>) -> Result<Self> {
        validate_shape(&shape)?;
        check_mode(mode, shape.len())?;
        let s = Shape::split(&shape, mode);
        if m.rows() != s.n || m.cols() != s.left * s.right {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix does not fold into mode {mode} of {shape:?}",
                m.rows(),
                m.cols()
            )));
        }
        let src = m.as_slice();
        let mut values = vec![T::zero(); src.len()];
        for r in 0..s.right {
            for a in 0..s.n {
                let dst = &mut values[(a + s.n * r) * s.left..][..s.left];
                for (l, v) in dst.iter_mut().enumerate() {
                    *v = src[a + s.n * (l + s.left * r)];
                }
            }
        }
        Ok(Self { shape, values })
    }

    /// `Y = X ×_mode A` with `Y_{..i..} = Σ_k A_{ik} X_{..k..}`.
    pub fn mode_product(&self, mode: usize, a: &Matrix<T>) -> Result<Self> {
        check_mode(mode, self.ndim())?;
        if a.cols() != self.shape[mode] {
            return Err(Error::DimensionMismatch(format!(
                "mode {mode} has size {}, matrix has {} columns",
                self.shape[mode],
                a.cols()
            )));
        }
        let s = Shape::split(&self.shape, mode);
        let values = apply_mode(&self.values, s.left, s.n, s.right, a);
        let mut shape = self.shape.clone();
        shape[mode] = a.rows();
        Ok(Self { shape, values })
    }

    /// `X ×_1 A_1 ×_2 … ×_d A_d`.
    pub fn multi_mode_product(&self, mats: &[Matrix<T>]) -> Result<Self> {
        if mats.len() != self.ndim() {
            return Err(Error::DimensionMismatch(format!(
                "{} matrices for a {}-mode tensor",
                mats.len(),
                self.ndim()
            )));
        }
        let mut out = self.clone();
        for (i, a) in mats.iter().enumerate() {
            out = out.mode_product(i, a)?;
        }
        Ok(out)
    }

    /// `X^{{k}}`: the first `k` indices as rows, the rest as columns.
    pub fn leading_matricization(&self, k: usize) -> Result<Matrix<T>> {
        if k == 0 || k > self.ndim() {
            return Err(Error::ModeOutOfRange {
                index: k,
                len: self.ndim(),
            });
        }
        let rows: usize = self.shape[..k].iter().product();
        Matrix::from_col_major(rows, self.values.len() / rows, self.values.clone())
    }

    /// Numerical multilinear rank: per mode, the number of singular values of
    /// the unfolding above `rel_tol · σ_max`.
    pub fn multilinear_rank(&self, rel_tol: T) -> Result<Vec<usize>> {
        (0..self.ndim())
            .map(|i| numerical_rank(&self.unfold(i)?, rel_tol))
            .collect()
    }

    /// Numerical TT-rank from the leading matricizations.
    pub fn tt_rank(&self, rel_tol: T) -> Result<Vec<usize>> {
        (1..self.ndim())
            .map(|k| numerical_rank(&self.leading_matricization(k)?, rel_tol))
            .collect()
    }

    pub fn cast<U: Scalar>(&self) -> DenseTensor<U> {
        DenseTensor {
            shape: self.shape.clone(),
            values: self.values.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}

pub(crate) fn numerical_rank<T: Scalar>(m: &Matrix<T>, rel_tol: T) -> Result<usize> {
    let f = svd(m)?;
    let top = f.s.first().copied().unwrap_or(T::zero());
    if top == T::zero() {
        return Ok(0);
    }
    Ok(f.s.iter().filter(|&&s| s > rel_tol * top).count())
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::InvalidArgument("a tensor needs at least one mode".into()));
    }
    if shape.contains(&0) {
        return Err(Error::InvalidArgument(format!("zero-length mode in shape {shape:?}")));
    }
    Ok(())
}

/// Advances a multi-index in storage order (first index fastest).
fn increment(idx: &mut [usize], shape: &[usize]) {
    for (i, n) in idx.iter_mut().zip(shape) {
        *i += 1;
        if *i < *n {
            return;
        }
        *i = 0;
    }
}

const PARALLEL_MIN_ENTRIES: usize = 1 << 15;

/// Applies `A` (m×n) along the middle axis of a `[left, n, right]` array.
pub(crate) fn apply_mode<T: Scalar>(x: &[T], left: usize, n: usize, right: usize, a: &Matrix<T>) -> Vec<T> {
    let m = a.rows();
    debug_assert_eq!(a.cols(), n);
    debug_assert_eq!(x.len(), left * n * right);
    let mut y = vec![T::zero(); left * m * right];
    if y.is_empty() {
        return y;
    }
    let block = |r: usize, ys: &mut [T]| {
        let xs = &x[r * n * left..(r + 1) * n * left];
        if left == 1 {
            for (k, &xk) in xs.iter().enumerate() {
                if xk == T::zero() {
                    continue;
                }
                for (yi, &aik) in ys.iter_mut().zip(a.col(k)) {
                    *yi += aik * xk;
                }
            }
        } else {
            for k in 0..n {
                let xk = &xs[k * left..(k + 1) * left];
                for (i, &aik) in a.col(k).iter().enumerate() {
                    if aik == T::zero() {
                        continue;
                    }
                    for (yv, &xv) in ys[i * left..(i + 1) * left].iter_mut().zip(xk) {
                        *yv += aik * xv;
                    }
                }
            }
        }
    };
    let chunk = left * m;
    if y.len() >= PARALLEL_MIN_ENTRIES && right > 1 {
        y.par_chunks_mut(chunk).enumerate().for_each(|(r, ys)| block(r, ys));
    } else {
        y.chunks_mut(chunk).enumerate().for_each(|(r, ys)| block(r, ys));
    }
    y
}
