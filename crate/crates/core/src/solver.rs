//! Application of `𝒜^{-α}` for a Kronecker sum `𝒜 = A_1 ⊕ … ⊕ A_d` of
//! symmetric positive definite factors.
//!
//! Every solver evaluates `X_N = λ_min^{-α} Σ_j α_j · C ×_1 E_{1j} … ×_d E_{dj}`
//! with `E_{ij} = exp(-β_j A_i / λ_min)`.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expsum::{total_error_bound, ExpSum};
use crate::linalg::{kron, qr, symmetric_eigen, Matrix, SymmetricEigen};
use crate::scalar::Scalar;
use crate::tensor::{hosvd, CpTensor, DenseTensor, HosvdTarget, TtTensor, TuckerTensor};

/// Default limit on the number of entries a dense path may materialize.
pub const DEFAULT_MEMORY_CAP: usize = 1 << 27;

#[derive(Debug, Clone)]
pub struct KroneckerSum<T: Scalar> {
    factors: Vec<Matrix<T>>,
    spectra: Vec<SymmetricEigen<T>>,
    lambda_min: T,
    memory_cap: usize,
}

impl<T: Scalar> KroneckerSum<T> {
    pub fn new(factors: Vec<Matrix<T>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("a Kronecker sum needs at least one factor".into()));
        }
        let mut spectra = Vec::with_capacity(factors.len());
        for (i, a) in factors.iter().enumerate() {
            if !a.is_square() || a.rows() == 0 {
                return Err(Error::NotSpd(format!("factor {i} is {}x{}", a.rows(), a.cols())));
            }
            let scale = a.max_abs();
            if a.asymmetry() > T::lit(1e-12) * scale {
                return Err(Error::NotSpd(format!("factor {i} is not symmetric")));
            }
            let eig = symmetric_eigen(a)?;
            if !(eig.values[0] > T::zero()) {
                return Err(Error::NotSpd(format!(
                    "factor {i} has smallest eigenvalue {}",
                    eig.values[0]
                )));
            }
            spectra.push(eig);
        }
        let lambda_min = spectra.iter().map(|e| e.values[0]).sum();
        Ok(Self {
            factors,
            spectra,
            lambda_min,
            memory_cap: DEFAULT_MEMORY_CAP,
        })
    }

    /// `d` copies of the same factor.
    pub fn uniform(a: Matrix<T>, d: usize) -> Result<Self> {
        Self::new(vec![a; d])
    }

    pub fn with_memory_cap(mut self, cap: usize) -> Self {
        self.memory_cap = cap;
        self
    }

    pub fn memory_cap(&self) -> usize {
        self.memory_cap
    }

    pub fn ndim(&self) -> usize {
        self.factors.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|a| a.rows()).collect()
    }

    pub fn factors(&self) -> &[Matrix<T>] {
        &self.factors
    }

    pub fn spectra(&self) -> &[SymmetricEigen<T>] {
        &self.spectra
    }

    /// Smallest eigenvalue of the Kronecker sum.
    pub fn lambda_min(&self) -> T {
        self.lambda_min
    }

    /// Largest eigenvalue of the Kronecker sum.
    pub fn lambda_max(&self) -> T {
        self.spectra.iter().map(|e| *e.values.last().expect("non-empty")).sum()
    }

    /// The Kronecker sum `s·𝒜`.
    pub fn scaled(&self, s: T) -> Result<Self> {
        let factors = self
            .factors
            .iter()
            .map(|a| {
                let mut a = a.clone();
                a.scale(s);
                a
            })
            .collect();
        Ok(Self::new(factors)?.with_memory_cap(self.memory_cap))
    }

    /// The matrix of `𝒜` acting on `vec(X)`.
    ///
    /// With the first index fastest, mode `i` sits at Kronecker position
    /// `d − i` (counting from 1), i.e. `𝒜 = Σ_i I ⊗ … ⊗ A_i ⊗ … ⊗ I` with
    /// the factors listed from the last mode to the first.
    pub fn to_matrix(&self) -> Result<Matrix<T>> {
        let n: usize = self.shape().iter().product();
        self.check_cap(n.saturating_mul(n))?;
        let mut total = Matrix::zeros(n, n);
        for i in 0..self.ndim() {
            let mut term = Matrix::identity(1);
            for m in (0..self.ndim()).rev() {
                let f = if m == i {
                    self.factors[m].clone()
                } else {
                    Matrix::identity(self.factors[m].rows())
                };
                term = kron(&term, &f);
            }
            for (a, &b) in total.as_mut_slice().iter_mut().zip(term.as_slice()) {
                *a += b;
            }
        }
        Ok(total)
    }

    fn check_cap(&self, requested: usize) -> Result<()> {
        if requested > self.memory_cap {
            return Err(Error::MemoryCap {
                requested,
                cap: self.memory_cap,
            });
        }
        Ok(())
    }

    fn check_shape(&self, shape: &[usize]) -> Result<()> {
        if shape != self.shape() {
            return Err(Error::DimensionMismatch(format!(
                "operand shape {shape:?} does not match operator shape {:?}",
                self.shape()
            )));
        }
        Ok(())
    }

    /// `exp(-β_j Λ_i / λ_min)` for every mode `i` (rows) and term `j` (columns).
    fn exponential_spectra(&self, es: &ExpSum<T>) -> Vec<Matrix<T>> {
        let lm = self.lambda_min;
        self.spectra
            .iter()
            .map(|e| Matrix::from_fn(e.values.len(), es.len(), |k, j| (-es.exponents()[j] * e.values[k] / lm).exp()))
            .collect()
    }
}

/// Certificate and bookkeeping for one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T> {
    pub n_terms: usize,
    /// Absolute Frobenius-norm bound on `‖X_N − 𝒜^{-α}C‖`, including any
    /// recompression error.
    pub error_bound: T,
    /// Part of `error_bound` due to recompression.
    pub rounding_bound: T,
    pub lambda_min: T,
    /// `λ_min^{-α}`.
    pub prefactor: T,
    pub wall_time: f64,
    pub ranks: Vec<usize>,
}

impl<T: Scalar> SolveReport<T> {
    pub fn max_rank(&self) -> usize {
        self.ranks.iter().copied().max().unwrap_or(1)
    }

    /// `N error_bound wall_time max_rank`.
    pub fn dat_row(&self) -> String {
        format!(
            "{} {:.17e} {:.6e} {}",
            self.n_terms,
            self.error_bound.to_f64_lossy(),
            self.wall_time,
            self.max_rank()
        )
    }
}

fn report<T: Scalar>(ks: &KroneckerSum<T>, es: &ExpSum<T>, c_norm: T, start: Instant, ranks: Vec<usize>) -> SolveReport<T> {
    let alpha = es.params().alpha();
    let prefactor = ks.lambda_min.powf(-alpha);
    SolveReport {
        n_terms: es.len(),
        error_bound: prefactor * total_error_bound(es.params()) * c_norm,
        rounding_bound: T::zero(),
        lambda_min: ks.lambda_min,
        prefactor,
        wall_time: start.elapsed().as_secs_f64(),
        ranks,
    }
}

/// `E[i][j] = exp(-β_j A_i / λ_min)` through the factor eigendecompositions.
pub fn factor_exponentials<T: Scalar>(ks: &KroneckerSum<T>, es: &ExpSum<T>) -> Vec<Vec<Matrix<T>>> {
    let lm = ks.lambda_min;
    ks.spectra
        .iter()
        .map(|e| {
            es.exponents()
                .par_iter()
                .map(|&b| e.apply_function(|l| (-b * l / lm).exp()))
                .collect()
        })
        .collect()
}

/// `λ_min^{-α} α_j` for every term.
fn scaled_weights<T: Scalar>(ks: &KroneckerSum<T>, es: &ExpSum<T>) -> Vec<T> {
    let pre = ks.lambda_min.powf(-es.params().alpha());
    es.weights().iter().map(|&w| w * pre).collect()
}

fn to_eigenbasis<T: Scalar>(ks: &KroneckerSum<T>, c: &DenseTensor<T>) -> Result<DenseTensor<T>> {
    let mut y = c.clone();
    for (i, e) in ks.spectra.iter().enumerate() {
        y = y.mode_product(i, &e.vectors.transpose())?;
    }
    Ok(y)
}

fn from_eigenbasis<T: Scalar>(ks: &KroneckerSum<T>, y: &DenseTensor<T>) -> Result<DenseTensor<T>> {
    let mut x = y.clone();
    for (i, e) in ks.spectra.iter().enumerate() {
        x = x.mode_product(i, &e.vectors)?;
    }
    Ok(x)
}

const SUM_CHUNK: usize = 8;

// Sums terms in parallel with a fixed association order, so the result does
// not depend on the thread count.
fn ordered_sum<T: Scalar, F>(n: usize, shape: &[usize], term: F) -> DenseTensor<T>
where
    F: Fn(usize) -> DenseTensor<T> + Sync,
{
    let zero = || DenseTensor::zeros(shape.to_vec()).expect("valid shape");
    let starts: Vec<usize> = (0..n).step_by(SUM_CHUNK).collect();
    let partial: Vec<DenseTensor<T>> = starts
        .into_par_iter()
        .map(|s| (s..(s + SUM_CHUNK).min(n)).fold(zero(), |a, j| a.add(&term(j)).expect("same shape")))
        .collect();
    partial.into_iter().fold(zero(), |a, b| a.add(&b).expect("same shape"))
}

/// The dense `X_N`.
///
/// Runs in the joint eigenbasis: `C` is transformed once, scaled entrywise by
/// `Σ_j λ_min^{-α} α_j Π_i exp(-β_j λ_{i,k_i}/λ_min)` and transformed back.
/// This is the same sum as [`solve_dense_direct`] in a cheaper order.
pub fn solve_dense<T: Scalar>(
    ks: &KroneckerSum<T>,
    c: &DenseTensor<T>,
    es: &ExpSum<T>,
) -> Result<(DenseTensor<T>, SolveReport<T>)> {
    let start = Instant::now();
    ks.check_shape(c.shape())?;
    ks.check_cap(c.len())?;
    let weights = scaled_weights(ks, es);
    let mut tables = ks.exponential_spectra(es);
    for (j, &w) in weights.iter().enumerate() {
        for v in tables[0].col_mut(j) {
            *v *= w;
        }
    }
    let multiplier = contract_cp_tables(&tables);
    let mut y = to_eigenbasis(ks, c)?;
    for (v, &m) in y.values_mut().iter_mut().zip(&multiplier) {
        *v *= m;
    }
    let x = from_eigenbasis(ks, &y)?;
    let shape = c.shape().to_vec();
    Ok((x, report(ks, es, c.frobenius_norm(), start, shape)))
}

/// Dense entries of the CP tensor whose factors are `tables`.
fn contract_cp_tables<T: Scalar>(tables: &[Matrix<T>]) -> Vec<T> {
    let n_terms = tables[0].cols();
    let d = tables.len();
    // Khatri-Rao product of all but the last table, one column per term.
    let mut kr: Vec<Vec<T>> = (0..n_terms).map(|j| tables[0].col(j).to_vec()).collect();
    if d == 1 {
        let n = tables[0].rows();
        return (0..n).map(|k| (0..n_terms).map(|j| kr[j][k]).sum()).collect();
    }
    for t in &tables[1..d - 1] {
        kr = kr
            .into_par_iter()
            .enumerate()
            .map(|(j, col)| {
                let mut next = Vec::with_capacity(col.len() * t.rows());
                for &u in t.col(j) {
                    next.extend(col.iter().map(|&c| c * u));
                }
                next
            })
            .collect();
    }
    let last = &tables[d - 1];
    let rows = kr[0].len();
    let mut out = vec![T::zero(); rows * last.rows()];
    out.par_chunks_mut(rows).enumerate().for_each(|(k, dst)| {
        for (j, col) in kr.iter().enumerate() {
            let w = last[(k, j)];
            if w == T::zero() {
                continue;
            }
            for (o, &c) in dst.iter_mut().zip(col) {
                *o += c * w;
            }
        }
    });
    out
}

/// The dense `X_N` by explicit mode products with every `E_{ij}`.
pub fn solve_dense_direct<T: Scalar>(
    ks: &KroneckerSum<T>,
    c: &DenseTensor<T>,
    es: &ExpSum<T>,
) -> Result<(DenseTensor<T>, SolveReport<T>)> {
    let start = Instant::now();
    ks.check_shape(c.shape())?;
    ks.check_cap(c.len())?;
    let e = factor_exponentials(ks, es);
    let weights = scaled_weights(ks, es);
    let x = ordered_sum(es.len(), c.shape(), |j| {
        let mut t = c.clone();
        for (i, ei) in e.iter().enumerate() {
            t = t.mode_product(i, &ei[j]).expect("shapes checked");
        }
        t.scaled(weights[j])
    });
    let shape = c.shape().to_vec();
    Ok((x, report(ks, es, c.frobenius_norm(), start, shape)))
}

/// `X_N` for a CP right-hand side; the result has exactly `N · rank(C)` terms.
pub fn solve_cp<T: Scalar>(
    ks: &KroneckerSum<T>,
    c: &CpTensor<T>,
    es: &ExpSum<T>,
) -> Result<(CpTensor<T>, SolveReport<T>)> {
    let start = Instant::now();
    ks.check_shape(&c.shape())?;
    let tables = ks.exponential_spectra(es);
    let weights = scaled_weights(ks, es);
    let r = c.rank();
    let n_terms = es.len();
    let factors = ks
        .spectra
        .iter()
        .zip(c.factors())
        .zip(&tables)
        .enumerate()
        .map(|(i, ((eig, u), table))| {
            let w = eig.vectors.tr_matmul(u)?;
            let blocks: Vec<Matrix<T>> = (0..n_terms)
                .into_par_iter()
                .map(|j| {
                    let mut b = Matrix::from_fn(w.rows(), r, |k, l| table[(k, j)] * w[(k, l)]);
                    if i == 0 {
                        b.scale(weights[j]);
                    }
                    eig.vectors.matmul(&b).expect("sizes agree")
                })
                .collect();
            let n = u.rows();
            let mut data = Vec::with_capacity(n * r * n_terms);
            for b in blocks {
                data.extend_from_slice(b.as_slice());
            }
            Matrix::from_col_major(n, r * n_terms, data)
        })
        .collect::<Result<Vec<_>>>()?;
    let out = CpTensor::new(factors)?;
    let norm = cp_norm(c)?;
    let rank = vec![out.rank()];
    Ok((out, report(ks, es, norm, start, rank)))
}

/// `‖C‖_F` for a CP tensor via the Gram matrices.
pub fn cp_norm<T: Scalar>(c: &CpTensor<T>) -> Result<T> {
    let r = c.rank();
    let mut g = Matrix::from_fn(r, r, |_, _| T::one());
    for f in c.factors() {
        let h = f.tr_matmul(f)?;
        for (a, &b) in g.as_mut_slice().iter_mut().zip(h.as_slice()) {
            *a *= b;
        }
    }
    Ok(g.as_slice().iter().copied().sum::<T>().max(T::zero()).sqrt())
}

/// `X_N` for a Tucker right-hand side.
///
/// The stacked factors `[E_{i1}U_i … E_{iN}U_i]` are re-orthogonalized by QR
/// and the block-diagonal core is folded into the triangular factors. A
/// positive `trunc_tol` then applies HOSVD truncation at that relative
/// tolerance.
pub fn solve_tucker<T: Scalar>(
    ks: &KroneckerSum<T>,
    c: &TuckerTensor<T>,
    es: &ExpSum<T>,
    trunc_tol: T,
) -> Result<(TuckerTensor<T>, SolveReport<T>)> {
    let start = Instant::now();
    ks.check_shape(&c.shape())?;
    let tables = ks.exponential_spectra(es);
    let weights = scaled_weights(ks, es);
    let n_terms = es.len();
    let mut q_factors = Vec::with_capacity(ks.ndim());
    let mut r_blocks: Vec<Vec<Matrix<T>>> = Vec::with_capacity(ks.ndim());
    for ((eig, u), table) in ks.spectra.iter().zip(c.factors()).zip(&tables) {
        let w = eig.vectors.tr_matmul(u)?;
        let r = u.cols();
        let mut stacked = Vec::with_capacity(u.rows() * r * n_terms);
        for j in 0..n_terms {
            let b = Matrix::from_fn(w.rows(), r, |k, l| table[(k, j)] * w[(k, l)]);
            stacked.extend_from_slice(eig.vectors.matmul(&b)?.as_slice());
        }
        let f = qr(&Matrix::from_col_major(u.rows(), r * n_terms, stacked)?);
        let blocks = (0..n_terms)
            .map(|j| Matrix::from_fn(f.r.rows(), r, |a, l| f.r[(a, j * r + l)]))
            .collect();
        q_factors.push(f.q);
        r_blocks.push(blocks);
    }
    let zero_shape: Vec<usize> = q_factors.iter().map(|q| q.cols()).collect();
    let core = ordered_sum(n_terms, &zero_shape, |j| {
        let mut t = c.core().clone();
        for (i, blocks) in r_blocks.iter().enumerate() {
            t = t.mode_product(i, &blocks[j]).expect("sizes agree");
        }
        t.scaled(weights[j])
    });
    let mut out = TuckerTensor::new(core, q_factors)?;
    let mut rounding = T::zero();
    if trunc_tol > T::zero() {
        let h = hosvd(out.core(), &HosvdTarget::Tolerance(trunc_tol))?;
        rounding = h.discarded_energy().sqrt();
        let factors = out
            .factors()
            .iter()
            .zip(h.tucker.factors())
            .map(|(q, v)| q.matmul(v))
            .collect::<Result<Vec<_>>>()?;
        out = TuckerTensor::new(h.tucker.core().clone(), factors)?;
    }
    let c_norm = c.core().frobenius_norm();
    let mut rep = report(ks, es, c_norm, start, out.ranks());
    rep.rounding_bound = rounding;
    rep.error_bound += rounding;
    Ok((out, rep))
}

/// `X_N` for a TT right-hand side, accumulated in ascending `j`.
///
/// With `round_tol > 0` the partial sum is recompressed after every addition
/// and each recompression adds `round_tol·√(d−1)·‖partial‖` to the bound.
/// `round_tol = 0` skips recompression, leaving ranks `N·r_i`.
pub fn solve_tt<T: Scalar>(
    ks: &KroneckerSum<T>,
    c: &TtTensor<T>,
    es: &ExpSum<T>,
    round_tol: T,
) -> Result<(TtTensor<T>, SolveReport<T>)> {
    let start = Instant::now();
    ks.check_shape(&c.shape())?;
    if round_tol < T::zero() {
        return Err(Error::InvalidArgument(format!("negative rounding tolerance {round_tol}")));
    }
    let e = factor_exponentials(ks, es);
    let weights = scaled_weights(ks, es);
    let term = |j: usize| -> Result<TtTensor<T>> {
        let mats: Vec<Matrix<T>> = e.iter().map(|ei| ei[j].clone()).collect();
        let mut t = c.multi_mode_product(&mats)?;
        t.scale(weights[j]);
        Ok(t)
    };
    let d = ks.ndim();
    let sqrt_dm1 = T::from_usize_lossy(d.saturating_sub(1)).sqrt();
    let (out, rounding) = if round_tol == T::zero() {
        let terms = (0..es.len()).into_par_iter().map(term).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&TtTensor<T>> = terms.iter().collect();
        (TtTensor::sum(&refs)?, T::zero())
    } else {
        let mut acc = term(0)?;
        let mut rounding = T::zero();
        for j in 1..es.len() {
            let partial = acc.add(&term(j)?)?;
            let norm = partial.frobenius_norm();
            acc = partial.round(round_tol)?;
            rounding += round_tol * sqrt_dm1 * norm;
        }
        (acc, rounding)
    };
    let mut rep = report(ks, es, c.frobenius_norm(), start, out.ranks());
    rep.rounding_bound = rounding;
    rep.error_bound += rounding;
    Ok((out, rep))
}

/// Exact `𝒜^{-α}C` by diagonalization. `alpha = 0` gives the identity.
pub fn oracle_apply<T: Scalar>(ks: &KroneckerSum<T>, c: &DenseTensor<T>, alpha: T) -> Result<DenseTensor<T>> {
    ks.check_shape(c.shape())?;
    ks.check_cap(c.len())?;
    if !(alpha >= T::zero()) {
        return Err(Error::InvalidArgument(format!("oracle exponent must be nonnegative, got {alpha}")));
    }
    let mut y = to_eigenbasis(ks, c)?;
    let shape = c.shape().to_vec();
    let d = shape.len();
    let lambdas: Vec<&[T]> = ks.spectra.iter().map(|e| e.values.as_slice()).collect();
    let mut idx = vec![0usize; d];
    for v in y.values_mut() {
        let s: T = idx.iter().zip(&lambdas).map(|(&k, l)| l[k]).sum();
        *v *= s.powf(-alpha);
        for (i, n) in idx.iter_mut().zip(&shape) {
            *i += 1;
            if *i < *n {
                break;
            }
            *i = 0;
        }
    }
    from_eigenbasis(ks, &y)
}

/// `C ×_1 exp(tA_1) … ×_d exp(tA_d)`, i.e. `exp(t𝒜) vec(C)`.
pub fn exp_kron_apply<T: Scalar>(ks: &KroneckerSum<T>, c: &DenseTensor<T>, t: T) -> Result<DenseTensor<T>> {
    ks.check_shape(c.shape())?;
    let mut x = c.clone();
    for (i, e) in ks.spectra.iter().enumerate() {
        x = x.mode_product(i, &e.apply_function(|l| (t * l).exp()))?;
    }
    Ok(x)
}

/// `Σ_i C ×_i A_i`, the forward operator.
pub fn apply_operator<T: Scalar>(ks: &KroneckerSum<T>, c: &DenseTensor<T>) -> Result<DenseTensor<T>> {
    ks.check_shape(c.shape())?;
    let mut out = DenseTensor::zeros(c.shape().to_vec())?;
    for (i, a) in ks.factors.iter().enumerate() {
        out = out.add(&c.mode_product(i, a)?)?;
    }
    Ok(out)
}

/// Entries of `𝒜 X` along the mode-`mode` fiber through `idx` for a TT `X`,
/// evaluated from TT entries without densifying `X`.
pub fn tt_operator_fiber<T: Scalar>(ks: &KroneckerSum<T>, x: &TtTensor<T>, idx: &[usize], mode: usize) -> Result<Vec<T>> {
    ks.check_shape(&x.shape())?;
    if mode >= ks.ndim() || idx.len() != ks.ndim() {
        return Err(Error::ModeOutOfRange { index: mode, len: ks.ndim() });
    }
    let n = ks.shape()[mode];
    let mut out = vec![T::zero(); n];
    let mut at = idx.to_vec();
    for (p, o) in out.iter_mut().enumerate() {
        at[mode] = p;
        for (m, a) in ks.factors.iter().enumerate() {
            let k = at[m];
            let mut src = at.clone();
            for q in 0..a.cols() {
                let aq = a[(k, q)];
                if aq != T::zero() {
                    src[m] = q;
                    *o += aq * x.entry(&src);
                }
            }
        }
    }
    Ok(out)
}
