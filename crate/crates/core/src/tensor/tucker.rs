use super::DenseTensor;
use crate::error::{Error, Result};
use crate::linalg::{svd, truncation_rank, Matrix};
use crate::scalar::Scalar;

/// `core ×_1 U_1 … ×_d U_d` with orthonormal factor columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerTensor<T: Scalar> {
    core: DenseTensor<T>,
    factors: Vec<Matrix<T>>,
}

impl<T: Scalar> TuckerTensor<T> {
    pub fn new(core: DenseTensor<T>, factors: Vec<Matrix<T>>) -> Result<Self> {
        if factors.len() != core.ndim() {
            return Err(Error::DimensionMismatch(format!(
                "{} factors for a {}-mode core",
                factors.len(),
                core.ndim()
            )));
        }
        for (i, (f, &r)) in factors.iter().zip(core.shape()).enumerate() {
            if f.cols() != r || f.rows() < r {
                return Err(Error::DimensionMismatch(format!(
                    "factor {i} is {}x{} but core mode has size {r}",
                    f.rows(),
                    f.cols()
                )));
            }
        }
        Ok(Self { core, factors })
    }

    pub fn core(&self) -> &DenseTensor<T> {
        &self.core
    }

    pub fn factors(&self) -> &[Matrix<T>] {
        &self.factors
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.core.shape().to_vec()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.rows()).collect()
    }

    pub fn mode_product(&self, mode: usize, a: &Matrix<T>) -> Result<Self> {
        super::check_mode(mode, self.factors.len())?;
        let mut factors = self.factors.clone();
        factors[mode] = a.matmul(&self.factors[mode])?;
        Ok(Self {
            core: self.core.clone(),
            factors,
        })
    }

    pub fn to_dense(&self) -> DenseTensor<T> {
        self.core
            .multi_mode_product(&self.factors)
            .expect("factor shapes are validated on construction")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HosvdTarget<T> {
    Ranks(Vec<usize>),
    /// Relative Frobenius tolerance, split evenly over the modes.
    Tolerance(T),
}

#[derive(Debug, Clone)]
pub struct Hosvd<T: Scalar> {
    pub tucker: TuckerTensor<T>,
    /// All singular values of each unfolding, descending.
    pub singular_values: Vec<Vec<T>>,
}

impl<T: Scalar> Hosvd<T> {
    /// `Σ_i Σ_{k ≥ r_i} σ_{i,k}²`, an upper bound on the squared error.
    pub fn discarded_energy(&self) -> T {
        self.singular_values
            .iter()
            .zip(self.tucker.ranks())
            .map(|(s, r)| s[r.min(s.len())..].iter().map(|&v| v * v).sum::<T>())
            .sum()
    }
}

pub fn hosvd<T: Scalar>(x: &DenseTensor<T>, target: &HosvdTarget<T>) -> Result<Hosvd<T>> {
    let d = x.ndim();
    if let HosvdTarget::Ranks(r) = target {
        if r.len() != d {
            return Err(Error::DimensionMismatch(format!("{} ranks for {d} modes", r.len())));
        }
        if let Some((i, _)) = r.iter().zip(x.shape()).enumerate().find(|(_, (&r, &n))| r == 0 || r > n) {
            return Err(Error::InvalidArgument(format!(
                "rank {} for mode {i} of size {}",
                r[i],
                x.shape()[i]
            )));
        }
    }
    let delta = match target {
        HosvdTarget::Tolerance(tol) => *tol * x.frobenius_norm() / T::from_usize_lossy(d).sqrt(),
        HosvdTarget::Ranks(_) => T::zero(),
    };
    let mut factors = Vec::with_capacity(d);
    let mut singular_values = Vec::with_capacity(d);
    for i in 0..d {
        let f = svd(&x.unfold(i)?)?;
        let r = match target {
            HosvdTarget::Ranks(r) => r[i],
            HosvdTarget::Tolerance(_) => truncation_rank(&f.s, delta).max(1),
        };
        let mut u = f.u.leading_cols(r.min(f.u.cols()));
        if u.cols() < r {
            u = pad_orthonormal(u, r);
        }
        factors.push(u);
        let mut s = f.s;
        s.resize(x.shape()[i], T::zero());
        singular_values.push(s);
    }
    let mut core = x.clone();
    for (i, u) in factors.iter().enumerate() {
        core = core.mode_product(i, &u.transpose())?;
    }
    Ok(Hosvd {
        tucker: TuckerTensor::new(core, factors)?,
        singular_values,
    })
}

/// Extends orthonormal columns to `r` columns (needed when an unfolding has
/// fewer columns than the requested rank).
fn pad_orthonormal<T: Scalar>(u: Matrix<T>, r: usize) -> Matrix<T> {
    let n = u.rows();
    let mut cols: Vec<Vec<T>> = (0..u.cols()).map(|j| u.col(j).to_vec()).collect();
    for e in 0..n {
        if cols.len() == r {
            break;
        }
        let mut v = vec![T::zero(); n];
        v[e] = T::one();
        for _ in 0..2 {
            for c in &cols {
                let p: T = c.iter().zip(&v).map(|(&a, &b)| a * b).sum();
                for (vi, &ci) in v.iter_mut().zip(c) {
                    *vi -= p * ci;
                }
            }
        }
        let norm = crate::linalg::norm2(&v);
        if norm > T::lit(0.5) {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Matrix::from_fn(n, r, |i, j| cols[j][i])
}
