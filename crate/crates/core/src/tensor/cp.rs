use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{check_mode, check_same_shape, DenseTensor};
use crate::error::{Error, Result};
use crate::linalg::{solve_spd_right, Matrix};
use crate::scalar::Scalar;

/// Sum of `rank` rank-one terms; column `l` of `factors[i]` is the mode-`i`
/// vector of term `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpTensor<T: Scalar> {
    factors: Vec<Matrix<T>>,
}

impl<T: Scalar> CpTensor<T> {
    pub fn new(factors: Vec<Matrix<T>>) -> Result<Self> {
        let Some(first) = factors.first() else {
            return Err(Error::InvalidArgument("a CP tensor needs at least one factor".into()));
        };
        let k = first.cols();
        if let Some(bad) = factors.iter().find(|f| f.cols() != k || f.rows() == 0) {
            return Err(Error::DimensionMismatch(format!(
                "factor of size {}x{} does not match rank {k}",
                bad.rows(),
                bad.cols()
            )));
        }
        Ok(Self { factors })
    }

    /// Rank-zero tensor of the given shape.
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::InvalidArgument(format!("invalid shape {shape:?}")));
        }
        Ok(Self {
            factors: shape.iter().map(|&n| Matrix::zeros(n, 0)).collect(),
        })
    }

    pub fn rank_one(vectors: &[&[T]]) -> Result<Self> {
        Self::new(
            vectors
                .iter()
                .map(|v| Matrix::from_col_major(v.len(), 1, v.to_vec()))
                .collect::<Result<_>>()?,
        )
    }

    pub fn rank(&self) -> usize {
        self.factors[0].cols()
    }

    pub fn ndim(&self) -> usize {
        self.factors.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.rows()).collect()
    }

    pub fn factors(&self) -> &[Matrix<T>] {
        &self.factors
    }

    pub fn into_factors(self) -> Vec<Matrix<T>> {
        self.factors
    }

    pub fn scale(&mut self, s: T) {
        let f = self.factors[0].as_mut_slice();
        for v in f {
            *v *= s;
        }
    }

    /// Concatenates the terms of `self` and `other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        check_same_shape(&self.shape(), &other.shape())?;
        let factors = self
            .factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| a.hcat(b))
            .collect::<Result<_>>()?;
        Ok(Self { factors })
    }

    /// Applies `a` to every term along `mode`.
    pub fn mode_product(&self, mode: usize, a: &Matrix<T>) -> Result<Self> {
        check_mode(mode, self.ndim())?;
        let mut factors = self.factors.clone();
        factors[mode] = a.matmul(&self.factors[mode])?;
        Ok(Self { factors })
    }

    /// Appends one term per factor to `acc` built from `self ×_1 m[0] … ×_d m[d−1]`.
    pub fn mode_products_add(acc: &Self, term: &Self, mats: &[Matrix<T>]) -> Result<Self> {
        if mats.len() != term.ndim() {
            return Err(Error::DimensionMismatch(format!(
                "{} matrices for a {}-mode tensor",
                mats.len(),
                term.ndim()
            )));
        }
        let mut t = term.clone();
        for (i, a) in mats.iter().enumerate() {
            t = t.mode_product(i, a)?;
        }
        acc.concat(&t)
    }

    /// Keeps the first `k` terms.
    pub fn leading_terms(&self, k: usize) -> Self {
        Self {
            factors: self.factors.iter().map(|f| f.leading_cols(k.min(f.cols()))).collect(),
        }
    }

    pub fn to_dense(&self) -> DenseTensor<T> {
        let shape = self.shape();
        let total: usize = shape.iter().product();
        let mut acc = vec![T::zero(); total];
        let mut buf = Vec::with_capacity(total);
        let mut next = Vec::with_capacity(total);
        for l in 0..self.rank() {
            buf.clear();
            buf.push(T::one());
            for f in &self.factors {
                next.clear();
                for &u in f.col(l) {
                    next.extend(buf.iter().map(|&x| x * u));
                }
                std::mem::swap(&mut buf, &mut next);
            }
            for (a, &b) in acc.iter_mut().zip(&buf) {
                *a += b;
            }
        }
        DenseTensor::new(shape, acc).expect("shape is consistent by construction")
    }

    pub fn cast<U: Scalar>(&self) -> CpTensor<U> {
        CpTensor {
            factors: self.factors.iter().map(|f| f.cast()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpAlsOptions<T> {
    pub max_iters: usize,
    pub tol: T,
    pub restarts: usize,
    pub seed: u64,
    pub ridge: T,
}

impl<T: Scalar> Default for CpAlsOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: T::lit(1e-12),
            restarts: 5,
            seed: 0,
            ridge: T::lit(1e-12),
        }
    }
}

/// One ALS run: the final iterate and the relative error after every sweep.
#[derive(Debug, Clone)]
pub struct CpAlsRun<T: Scalar> {
    pub cp: CpTensor<T>,
    pub errors: Vec<T>,
}

impl<T: Scalar> CpAlsRun<T> {
    pub fn rel_error(&self) -> T {
        *self.errors.last().expect("every run records at least one error")
    }
}

/// Best of `opts.restarts` random starts plus every warm start in `inits`.
pub fn cp_als<T: Scalar>(
    x: &DenseTensor<T>,
    rank: usize,
    opts: &CpAlsOptions<T>,
    inits: &[CpTensor<T>],
) -> Result<CpAlsRun<T>> {
    if rank == 0 {
        return Err(Error::InvalidArgument("cp_als needs rank ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<CpAlsRun<T>> = None;
    let starts = inits
        .iter()
        .cloned()
        .chain((0..opts.restarts).map(|_| random_init(x.shape(), rank, &mut rng)));
    for init in starts {
        let run = cp_als_run(x, init, opts)?;
        if best.as_ref().is_none_or(|b| run.rel_error() < b.rel_error()) {
            best = Some(run);
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("cp_als needs at least one start".into()))
}

/// ALS from a given starting point. The rank is taken from `init`.
pub fn cp_als_run<T: Scalar>(x: &DenseTensor<T>, init: CpTensor<T>, opts: &CpAlsOptions<T>) -> Result<CpAlsRun<T>> {
    check_same_shape(x.shape(), &init.shape())?;
    if init.rank() == 0 {
        return Err(Error::InvalidArgument("cp_als needs rank ≥ 1".into()));
    }
    let xnorm = x.frobenius_norm();
    let rel = |cp: &CpTensor<T>| -> T {
        let diff = cp.to_dense().sub(x).expect("same shape").frobenius_norm();
        if xnorm > T::zero() {
            diff / xnorm
        } else {
            diff
        }
    };
    let mut cp = init;
    let mut errors = vec![rel(&cp)];
    let d = cp.ndim();
    for _ in 0..opts.max_iters {
        let prev_factors = cp.factors.clone();
        for mode in 0..d {
            let mut gram = Matrix::from_fn(cp.rank(), cp.rank(), |_, _| T::one());
            for (m, f) in cp.factors.iter().enumerate() {
                if m == mode {
                    continue;
                }
                let g = f.tr_matmul(f)?;
                for (a, &b) in gram.as_mut_slice().iter_mut().zip(g.as_slice()) {
                    *a *= b;
                }
            }
            let rhs = mttkrp(x, &cp.factors, mode);
            cp.factors[mode] = solve_spd_right(&gram, &rhs, opts.ridge)?;
        }
        let err = rel(&cp);
        let prev = *errors.last().expect("non-empty");
        if err > prev {
            // A ridge-perturbed sweep can overshoot by round-off; keep the
            // better iterate so the recorded history stays monotone.
            cp.factors = prev_factors;
            break;
        }
        errors.push(err);
        if prev - err <= opts.tol * prev.max(T::epsilon()) {
            break;
        }
    }
    Ok(CpAlsRun { cp, errors })
}

fn random_init<T: Scalar>(shape: &[usize], rank: usize, rng: &mut ChaCha8Rng) -> CpTensor<T> {
    let factors = shape
        .iter()
        .map(|&n| {
            let mut m = Matrix::from_fn(n, rank, |_, _| {
                let v: f64 = StandardNormal.sample(rng);
                T::lit(v)
            });
            for l in 0..rank {
                let col = m.col_mut(l);
                let norm = crate::linalg::norm2(col);
                if norm > T::zero() {
                    for v in col {
                        *v /= norm;
                    }
                }
            }
            m
        })
        .collect();
    CpTensor { factors }
}

/// Row-wise Khatri-Rao product of `factors` (first factor fastest).
fn khatri_rao<T: Scalar>(factors: &[Matrix<T>], rank: usize) -> Vec<Vec<T>> {
    (0..rank)
        .map(|l| {
            let mut col = vec![T::one()];
            for f in factors {
                let mut next = Vec::with_capacity(col.len() * f.rows());
                for &u in f.col(l) {
                    next.extend(col.iter().map(|&c| c * u));
                }
                col = next;
            }
            col
        })
        .collect()
}

/// `X_(mode) · (⊙_{m≠mode} U_m)` computed without forming the unfolding.
fn mttkrp<T: Scalar>(x: &DenseTensor<T>, factors: &[Matrix<T>], mode: usize) -> Matrix<T> {
    let rank = factors[0].cols();
    let kl = khatri_rao(&factors[..mode], rank);
    let kr = khatri_rao(&factors[mode + 1..], rank);
    let left = kl[0].len();
    let right = kr[0].len();
    let n = x.shape()[mode];
    let vals = x.values();
    let mut out = Matrix::zeros(n, rank);
    for r in 0..right {
        for a in 0..n {
            let xs = &vals[(a + n * r) * left..][..left];
            for l in 0..rank {
                let w = kr[l][r];
                if w == T::zero() {
                    continue;
                }
                let dp: T = xs.iter().zip(&kl[l]).map(|(&p, &q)| p * q).sum();
                out[(a, l)] += w * dp;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_cp(shape: &[usize], rank: usize, seed: u64) -> CpTensor<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CpTensor::new(
            shape
                .iter()
                .map(|&n| Matrix::from_fn(n, rank, |_, _| rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn concat_ranks_and_dense() {
        let a = random_cp(&[3, 4, 2], 2, 1);
        let b = random_cp(&[3, 4, 2], 3, 2);
        let c = a.concat(&b).unwrap();
        assert_eq!(c.rank(), 5);
        let want = a.to_dense().add(&b.to_dense()).unwrap();
        assert!(c.to_dense().sub(&want).unwrap().frobenius_norm() < 1e-13);
        let z = CpTensor::zeros(&[3, 4, 2]).unwrap();
        assert_eq!(z.concat(&a).unwrap(), a);
        assert!(a.concat(&random_cp(&[3, 4, 3], 1, 3)).is_err());
    }

    #[test]
    fn mode_products_add_matches_dense() {
        let acc = random_cp(&[3, 3, 3], 1, 4);
        let term = random_cp(&[3, 3, 3], 2, 5);
        let mats: Vec<Matrix<f64>> = {
            let mut rng = ChaCha8Rng::seed_from_u64(6);
            (0..3).map(|_| Matrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0))).collect()
        };
        let out = CpTensor::mode_products_add(&acc, &term, &mats).unwrap();
        assert_eq!(out.rank(), 3);
        let want = acc.to_dense().add(&term.to_dense().multi_mode_product(&mats).unwrap()).unwrap();
        assert!(out.to_dense().sub(&want).unwrap().frobenius_norm() < 1e-13);
    }

    #[test]
    fn dense_of_rank_one_matches_outer() {
        let u = [1.0, 2.0];
        let v = [3.0, -1.0, 0.5];
        let cp = CpTensor::rank_one(&[&u, &v]).unwrap();
        assert_eq!(cp.to_dense(), DenseTensor::outer(&[&u, &v]).unwrap());
    }

    #[test]
    fn als_recovers_rank_one() {
        let x = random_cp(&[4, 5, 3], 1, 7).to_dense();
        let run = cp_als(&x, 1, &CpAlsOptions::default(), &[]).unwrap();
        assert!(run.rel_error() <= 1e-8, "{}", run.rel_error());
    }

    #[test]
    fn als_history_is_monotone() {
        let x = random_cp(&[5, 5, 5], 4, 8).to_dense();
        for seed in 0..3 {
            let opts = CpAlsOptions { restarts: 1, seed, ..Default::default() };
            let run = cp_als(&x, 2, &opts, &[]).unwrap();
            assert!(run.errors.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn als_accepts_large_rank() {
        let x = random_cp(&[2, 3, 4], 3, 9).to_dense();
        let run = cp_als(&x, 6, &CpAlsOptions { restarts: 1, ..Default::default() }, &[]).unwrap();
        assert!(run.rel_error().is_finite());
    }

    #[test]
    fn warm_start_does_not_increase_error() {
        let x = random_cp(&[4, 4, 4], 5, 10).to_dense();
        let opts = CpAlsOptions { restarts: 2, ..Default::default() };
        let k2 = cp_als(&x, 2, &opts, &[]).unwrap();
        let pad = k2.cp.concat(&random_cp(&[4, 4, 4], 1, 11)).unwrap();
        let init_err = pad.to_dense().sub(&x).unwrap().frobenius_norm() / x.frobenius_norm();
        let k3 = cp_als(&x, 3, &opts, &[pad]).unwrap();
        assert!(k3.rel_error() <= k2.rel_error() + 1e-12);
        assert!(k3.rel_error() <= init_err);
    }

    #[test]
    fn mttkrp_matches_unfolding_definition() {
        let x = random_cp(&[3, 2, 4], 2, 12).to_dense();
        let f = random_cp(&[3, 2, 4], 2, 13).into_factors();
        for mode in 0..3 {
            let others: Vec<Matrix<f64>> =
                f.iter().enumerate().filter(|(m, _)| *m != mode).map(|(_, m)| m.clone()).collect();
            let kr = khatri_rao(&others, 2);
            let unf = x.unfold(mode).unwrap();
            let kr_m = Matrix::from_fn(kr[0].len(), 2, |r, l| kr[l][r]);
            let want = unf.matmul(&kr_m).unwrap();
            assert!(mttkrp(&x, &f, mode).sub(&want).max_abs() < 1e-13);
        }
    }
}
