//! Benchmark instances: finite-difference Laplacian factors and sampled
//! right-hand sides.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::tensor::{CpTensor, DenseTensor, TtTensor};

/// Tolerance used when compressing sampled right-hand sides to TT.
pub const RHS_TT_TOL: f64 = 1e-10;

/// `n` unknowns with spacing `h = 1/(n−1)` at `x_k = k·h`, `k = 1..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D<T: Scalar> {
    n: usize,
    h: T,
    points: Vec<T>,
}

impl<T: Scalar> Grid1D<T> {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("a grid needs n ≥ 2 points, got {n}")));
        }
        let h = T::one() / T::from_usize_lossy(n - 1);
        let points = (1..=n).map(|k| T::from_usize_lossy(k) * h).collect();
        Ok(Self { n, h, points })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }
}

/// `(1/h²)·tridiag(−1, 2, −1)` of order `n`, `h = 1/(n−1)`.
pub fn laplacian_1d<T: Scalar>(n: usize) -> Result<Matrix<T>> {
    let h = Grid1D::<T>::new(n)?.h();
    let s = T::one() / (h * h);
    Ok(Matrix::from_fn(n, n, |i, j| {
        if i == j {
            T::lit(2.0) * s
        } else if i.abs_diff(j) == 1 {
            -s
        } else {
            T::zero()
        }
    }))
}

/// Closed-form spectrum of [`laplacian_1d`], ascending.
pub fn laplacian_1d_eigenvalues<T: Scalar>(n: usize) -> Result<Vec<T>> {
    let h = Grid1D::<T>::new(n)?.h();
    let denom = T::lit(2.0) * T::from_usize_lossy(n + 1);
    Ok((1..=n)
        .map(|k| {
            let s = (T::from_usize_lossy(k) * T::PI() / denom).sin();
            T::lit(4.0) * s * s / (h * h)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsKind {
    /// `1/(1 + x_1 + … + x_d)`.
    InvLinear,
    /// `sin(x)·cos(y)·e^z`, three modes only.
    Separable,
    /// Outer product of standard normal vectors.
    RandomRank1,
}

impl FromStr for RhsKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inv_linear" => Ok(Self::InvLinear),
            "separable" => Ok(Self::Separable),
            "random_rank1" => Ok(Self::RandomRank1),
            _ => Err(Error::Parse(format!(
                "unknown right-hand side {s:?} (expected inv_linear, separable or random_rank1)"
            ))),
        }
    }
}

impl fmt::Display for RhsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::InvLinear => "inv_linear",
            Self::Separable => "separable",
            Self::RandomRank1 => "random_rank1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RhsSpec {
    pub kind: RhsKind,
    pub d: usize,
    pub seed: u64,
}

impl RhsSpec {
    pub fn new(kind: RhsKind, d: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("the right-hand side needs d ≥ 1".into()));
        }
        if kind == RhsKind::Separable && d != 3 {
            return Err(Error::InvalidArgument(format!("separable right-hand side needs d = 3, got {d}")));
        }
        Ok(Self { kind, d, seed })
    }
}

/// A sampled right-hand side in whichever format suits its kind.
#[derive(Debug, Clone)]
pub enum Rhs<T: Scalar> {
    Dense(DenseTensor<T>),
    Cp(CpTensor<T>),
    Tt(TtTensor<T>),
}

impl<T: Scalar> Rhs<T> {
    pub fn shape(&self) -> Vec<usize> {
        match self {
            Self::Dense(x) => x.shape().to_vec(),
            Self::Cp(x) => x.shape(),
            Self::Tt(x) => x.shape(),
        }
    }

    pub fn to_dense(&self, cap: usize) -> Result<DenseTensor<T>> {
        let n: usize = self.shape().iter().product();
        if n > cap {
            return Err(Error::MemoryCap { requested: n, cap });
        }
        Ok(match self {
            Self::Dense(x) => x.clone(),
            Self::Cp(x) => x.to_dense(),
            Self::Tt(x) => x.to_dense(),
        })
    }

    pub fn to_tt(&self) -> Result<TtTensor<T>> {
        match self {
            Self::Dense(x) => TtTensor::from_dense(x, T::lit(RHS_TT_TOL)),
            Self::Cp(x) => TtTensor::from_cp(x),
            Self::Tt(x) => Ok(x.clone()),
        }
    }
}

fn check_grids<T: Scalar>(spec: &RhsSpec, grids: &[Grid1D<T>]) -> Result<()> {
    if grids.len() != spec.d {
        return Err(Error::DimensionMismatch(format!(
            "{} grids for a {}-dimensional right-hand side",
            grids.len(),
            spec.d
        )));
    }
    Ok(())
}

/// Samples the right-hand side at the grid points.
///
/// Separable and random kinds come back as rank-one CP tensors.
/// `inv_linear` is dense when it has at most `cap` entries and TT otherwise.
pub fn sample_rhs<T: Scalar>(spec: &RhsSpec, grids: &[Grid1D<T>], cap: usize) -> Result<Rhs<T>> {
    check_grids(spec, grids)?;
    match spec.kind {
        RhsKind::Separable => {
            let f: [fn(T) -> T; 3] = [T::sin, T::cos, T::exp];
            let vs: Vec<Vec<T>> = grids.iter().zip(f).map(|(g, f)| g.points().iter().map(|&x| f(x)).collect()).collect();
            let refs: Vec<&[T]> = vs.iter().map(|v| v.as_slice()).collect();
            Ok(Rhs::Cp(CpTensor::rank_one(&refs)?))
        }
        RhsKind::RandomRank1 => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let vs: Vec<Vec<T>> = grids
                .iter()
                .map(|g| {
                    (0..g.n())
                        .map(|_| {
                            let v: f64 = StandardNormal.sample(&mut rng);
                            T::lit(v)
                        })
                        .collect()
                })
                .collect();
            let refs: Vec<&[T]> = vs.iter().map(|v| v.as_slice()).collect();
            Ok(Rhs::Cp(CpTensor::rank_one(&refs)?))
        }
        RhsKind::InvLinear => {
            let n: usize = grids.iter().map(|g| g.n()).product();
            if n <= cap {
                Ok(Rhs::Dense(sample_function(grids, |x| T::one() / (T::one() + x.iter().copied().sum::<T>()), cap)?))
            } else {
                Ok(Rhs::Tt(inv_linear_tt(grids, T::lit(RHS_TT_TOL), cap)?))
            }
        }
    }
}

/// Dense samples of `f` on the tensor grid.
pub fn sample_function<T: Scalar>(grids: &[Grid1D<T>], f: impl Fn(&[T]) -> T, cap: usize) -> Result<DenseTensor<T>> {
    let shape: Vec<usize> = grids.iter().map(|g| g.n()).collect();
    let n: usize = shape.iter().product();
    if n > cap {
        return Err(Error::MemoryCap { requested: n, cap });
    }
    let mut x = vec![T::zero(); grids.len()];
    DenseTensor::from_fn(shape, |idx| {
        for ((xi, &k), g) in x.iter_mut().zip(idx).zip(grids) {
            *xi = g.points()[k];
        }
        f(&x)
    })
}

/// `1/(1 + Σx_i)` in TT format at relative accuracy `tol`.
///
/// Uses TT-SVD of the dense samples when they fit under `cap`. Larger grids
/// go through the separable expansion `1/s = ∫ exp(−s·eᵗ)·eᵗ dt`, discretized
/// by the trapezoidal rule and recompressed.
pub fn inv_linear_tt<T: Scalar>(grids: &[Grid1D<T>], tol: T, cap: usize) -> Result<TtTensor<T>> {
    let n: usize = grids.iter().map(|g| g.n()).product();
    if n <= cap {
        let x = sample_function(grids, |x| T::one() / (T::one() + x.iter().copied().sum::<T>()), cap)?;
        return TtTensor::from_dense(&x, tol);
    }
    let cp = inv_linear_cp(grids, tol * T::lit(1e-3))?;
    TtTensor::from_cp(&cp)?.round(tol)
}

/// Trapezoidal exponential sum for `1/s` on the range of `1 + Σx_i`, as a CP tensor.
pub fn inv_linear_cp<T: Scalar>(grids: &[Grid1D<T>], rel_tol: T) -> Result<CpTensor<T>> {
    if grids.is_empty() {
        return Err(Error::InvalidArgument("no grids".into()));
    }
    let s_min = T::one() + grids.iter().map(|g| g.points()[0]).sum::<T>();
    let s_max = T::one() + grids.iter().map(|g| *g.points().last().expect("n ≥ 2")).sum::<T>();
    let log_inv = -rel_tol.max(T::epsilon()).ln();
    // On the line Im t = π/3 the integrand has L¹ norm 2/s, so the relative
    // step error is at most 4·exp(−2π²/(3h)).
    let step = T::lit(2.0) * T::PI() * T::PI() / (T::lit(3.0) * (log_inv + T::lit(4.0).ln()));
    // Left tail ∫_{−∞}^{a} ≈ eᵃ against 1/s_max; right tail exp(−s_min·eᵇ).
    let a = -(log_inv + s_max.ln() + T::one());
    let b = ((log_inv + T::lit(3.0)) / s_min).ln();
    let j_lo = (a / step).floor().to_i64().unwrap_or(0);
    let j_hi = (b / step).ceil().to_i64().unwrap_or(0);
    let nodes: Vec<T> = (j_lo..=j_hi).map(|j| (T::lit(j as f64) * step).exp()).collect();
    let k = nodes.len();
    let factors = grids
        .iter()
        .enumerate()
        .map(|(i, g)| {
            Matrix::from_fn(g.n(), k, |p, l| {
                let e = (-nodes[l] * g.points()[p]).exp();
                if i == 0 {
                    step * nodes[l] * (-nodes[l]).exp() * e
                } else {
                    e
                }
            })
        })
        .collect();
    CpTensor::new(factors)
}
