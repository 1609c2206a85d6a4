use super::{apply_mode, check_mode, check_same_shape, CpTensor, DenseTensor};
use crate::error::{Error, Result};
use crate::linalg::{qr, svd, truncation_rank, Matrix};
use crate::scalar::Scalar;

/// One TT carriage with shape `r0 × n × r1`, stored as `a + r0·(i + n·b)`.
///
/// The storage is simultaneously the `(r0·n) × r1` left unfolding and the
/// `r0 × (n·r1)` right unfolding in column-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Carriage<T: Scalar> {
    r0: usize,
    n: usize,
    r1: usize,
    data: Vec<T>,
}

impl<T: Scalar> Carriage<T> {
    pub fn new(r0: usize, n: usize, r1: usize, data: Vec<T>) -> Result<Self> {
        if r0 == 0 || n == 0 || r1 == 0 {
            return Err(Error::InvalidArgument(format!("carriage dims {r0}x{n}x{r1}")));
        }
        if data.len() != r0 * n * r1 {
            return Err(Error::DimensionMismatch(format!(
                "carriage {r0}x{n}x{r1} needs {} values, got {}",
                r0 * n * r1,
                data.len()
            )));
        }
        Ok(Self { r0, n, r1, data })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.r0, self.n, self.r1)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, a: usize, i: usize, b: usize) -> T {
        self.data[a + self.r0 * (i + self.n * b)]
    }

    fn left_unfolding(&self) -> Matrix<T> {
        Matrix::from_col_major(self.r0 * self.n, self.r1, self.data.clone()).expect("sizes agree")
    }

    fn right_unfolding(&self) -> Matrix<T> {
        Matrix::from_col_major(self.r0, self.n * self.r1, self.data.clone()).expect("sizes agree")
    }

    fn from_left(m: Matrix<T>, r0: usize, n: usize) -> Self {
        let r1 = m.cols();
        Self { r0, n, r1, data: m.into_vec() }
    }

    fn from_right(m: Matrix<T>, n: usize, r1: usize) -> Self {
        let r0 = m.rows();
        Self { r0, n, r1, data: m.into_vec() }
    }

    /// The `r0 × r1` slice at physical index `i`.
    fn slice(&self, i: usize) -> Matrix<T> {
        Matrix::from_fn(self.r0, self.r1, |a, b| self.get(a, i, b))
    }
}

/// Tensor-train tensor with boundary ranks 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TtTensor<T: Scalar> {
    cores: Vec<Carriage<T>>,
}

impl<T: Scalar> TtTensor<T> {
    pub fn new(cores: Vec<Carriage<T>>) -> Result<Self> {
        let (Some(first), Some(last)) = (cores.first(), cores.last()) else {
            return Err(Error::InvalidArgument("a TT tensor needs at least one carriage".into()));
        };
        if first.r0 != 1 || last.r1 != 1 {
            return Err(Error::DimensionMismatch("boundary TT ranks must be 1".into()));
        }
        for (k, w) in cores.windows(2).enumerate() {
            if w[0].r1 != w[1].r0 {
                return Err(Error::DimensionMismatch(format!(
                    "carriage {k} has right rank {} but carriage {} has left rank {}",
                    w[0].r1,
                    k + 1,
                    w[1].r0
                )));
            }
        }
        Ok(Self { cores })
    }

    /// All-zero tensor with unit ranks.
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::new(
            shape
                .iter()
                .map(|&n| Carriage::new(1, n, 1, vec![T::zero(); n]))
                .collect::<Result<_>>()?,
        )
    }

    pub fn rank_one(vectors: &[&[T]]) -> Result<Self> {
        Self::new(
            vectors
                .iter()
                .map(|v| Carriage::new(1, v.len(), 1, v.to_vec()))
                .collect::<Result<_>>()?,
        )
    }

    pub fn cores(&self) -> &[Carriage<T>] {
        &self.cores
    }

    pub fn ndim(&self) -> usize {
        self.cores.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.n).collect()
    }

    /// Internal ranks `(r_1, …, r_{d−1})`.
    pub fn ranks(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1].iter().map(|c| c.r1).collect()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Number of stored values.
    pub fn storage(&self) -> usize {
        self.cores.iter().map(|c| c.data.len()).sum()
    }

    pub fn scale(&mut self, s: T) {
        for v in &mut self.cores[0].data {
            *v *= s;
        }
    }

    pub fn entry(&self, idx: &[usize]) -> T {
        debug_assert_eq!(idx.len(), self.ndim());
        let mut row = vec![T::one()];
        for (c, &i) in self.cores.iter().zip(idx) {
            row = (0..c.r1)
                .map(|b| row.iter().enumerate().map(|(a, &v)| v * c.get(a, i, b)).sum())
                .collect();
        }
        row[0]
    }

    pub fn to_dense(&self) -> DenseTensor<T> {
        let mut acc = self.cores[0].left_unfolding();
        for c in &self.cores[1..] {
            let p = acc.rows();
            let prod = acc.matmul(&c.right_unfolding()).expect("ranks agree");
            acc = Matrix::from_col_major(p * c.n, c.r1, prod.into_vec()).expect("sizes agree");
        }
        DenseTensor::new(self.shape(), acc.into_vec()).expect("sizes agree")
    }

    /// Sequential SVD sweep with per-step threshold `tol·‖X‖/√(d−1)`.
    pub fn from_dense(x: &DenseTensor<T>, tol: T) -> Result<Self> {
        Self::from_dense_capped(x, tol, usize::MAX)
    }

    /// [`TtTensor::from_dense`] with every rank additionally capped at `max_rank`.
    pub fn from_dense_capped(x: &DenseTensor<T>, tol: T, max_rank: usize) -> Result<Self> {
        if max_rank == 0 {
            return Err(Error::InvalidArgument("TT ranks must be at least 1".into()));
        }
        if tol < T::zero() {
            return Err(Error::InvalidArgument(format!("negative tolerance {tol}")));
        }
        let shape = x.shape();
        let d = shape.len();
        if d == 1 {
            return Self::new(vec![Carriage::new(1, shape[0], 1, x.values().to_vec())?]);
        }
        let delta = tol * x.frobenius_norm() / T::from_usize_lossy(d - 1).sqrt();
        let mut cores = Vec::with_capacity(d);
        let mut rest = x.values().to_vec();
        let mut r_prev = 1;
        for &n in &shape[..d - 1] {
            let rows = r_prev * n;
            let m = Matrix::from_col_major(rows, rest.len() / rows, rest)?;
            let f = svd(&m)?;
            let r = truncation_rank(&f.s, delta).clamp(1, max_rank);
            let f = f.truncate(r);
            cores.push(Carriage::from_left(f.u, r_prev, n));
            let sv = Matrix::from_fn(r, f.v.rows(), |a, j| f.s[a] * f.v[(j, a)]);
            rest = sv.into_vec();
            r_prev = r;
        }
        cores.push(Carriage::new(r_prev, shape[d - 1], 1, rest)?);
        Self::new(cores)
    }

    pub fn from_cp(cp: &CpTensor<T>) -> Result<Self> {
        let k = cp.rank();
        let d = cp.ndim();
        if k == 0 {
            return Self::zeros(&cp.shape());
        }
        let f = cp.factors();
        if d == 1 {
            let n = f[0].rows();
            let v = (0..n).map(|i| (0..k).map(|l| f[0][(i, l)]).sum()).collect();
            return Self::new(vec![Carriage::new(1, n, 1, v)?]);
        }
        let mut cores = Vec::with_capacity(d);
        // First carriage 1×n×k is U₁ itself.
        cores.push(Carriage::new(1, f[0].rows(), k, f[0].as_slice().to_vec())?);
        for u in &f[1..d - 1] {
            let n = u.rows();
            let mut data = vec![T::zero(); k * n * k];
            for l in 0..k {
                for i in 0..n {
                    data[l + k * (i + n * l)] = u[(i, l)];
                }
            }
            cores.push(Carriage::new(k, n, k, data)?);
        }
        let last = &f[d - 1];
        cores.push(Carriage::from_right(last.transpose(), last.rows(), 1));
        Self::new(cores)
    }

    /// `X ×_mode A`; only carriage `mode` changes and ranks are preserved.
    pub fn mode_product(&self, mode: usize, a: &Matrix<T>) -> Result<Self> {
        check_mode(mode, self.ndim())?;
        let c = &self.cores[mode];
        if a.cols() != c.n {
            return Err(Error::DimensionMismatch(format!(
                "mode {mode} has size {}, matrix has {} columns",
                c.n,
                a.cols()
            )));
        }
        let mut cores = self.cores.clone();
        cores[mode] = Carriage {
            r0: c.r0,
            n: a.rows(),
            r1: c.r1,
            data: apply_mode(&c.data, c.r0, c.n, c.r1, a),
        };
        Ok(Self { cores })
    }

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

    /// Block-diagonal sum; ranks add.
    pub fn add(&self, other: &Self) -> Result<Self> {
        Self::sum(&[self, other])
    }

    /// Block sum of many terms in one pass.
    pub fn sum(terms: &[&Self]) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::InvalidArgument("empty TT sum".into()));
        };
        let shape = first.shape();
        for t in terms {
            check_same_shape(&shape, &t.shape())?;
        }
        if terms.len() == 1 {
            return Ok((*first).clone());
        }
        let d = shape.len();
        if d == 1 {
            let mut data = vec![T::zero(); shape[0]];
            for t in terms {
                for (a, &b) in data.iter_mut().zip(&t.cores[0].data) {
                    *a += b;
                }
            }
            return Self::new(vec![Carriage::new(1, shape[0], 1, data)?]);
        }
        let mut cores = Vec::with_capacity(d);
        for (k, &n) in shape.iter().enumerate() {
            let r0: usize = if k == 0 { 1 } else { terms.iter().map(|t| t.cores[k].r0).sum() };
            let r1: usize = if k == d - 1 { 1 } else { terms.iter().map(|t| t.cores[k].r1).sum() };
            let mut data = vec![T::zero(); r0 * n * r1];
            let (mut off0, mut off1) = (0, 0);
            for t in terms {
                let c = &t.cores[k];
                for b in 0..c.r1 {
                    for i in 0..n {
                        for a in 0..c.r0 {
                            data[(off0 + a) + r0 * (i + n * (off1 + b))] = c.get(a, i, b);
                        }
                    }
                }
                if k > 0 {
                    off0 += c.r0;
                }
                if k < d - 1 {
                    off1 += c.r1;
                }
            }
            cores.push(Carriage { r0, n, r1, data });
        }
        Self::new(cores)
    }

    pub fn dot(&self, other: &Self) -> Result<T> {
        check_same_shape(&self.shape(), &other.shape())?;
        let mut g = Matrix::from_fn(1, 1, |_, _| T::one());
        for (a, b) in self.cores.iter().zip(&other.cores) {
            let mut next = Matrix::zeros(a.r1, b.r1);
            for i in 0..a.n {
                let t = a.slice(i).tr_matmul(&g)?.matmul(&b.slice(i))?;
                for (x, &y) in next.as_mut_slice().iter_mut().zip(t.as_slice()) {
                    *x += y;
                }
            }
            g = next;
        }
        Ok(g[(0, 0)])
    }

    pub fn frobenius_norm(&self) -> T {
        self.orthogonalized().0.cores[0].data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Right-to-left QR sweep; all carriages but the first become
    /// right-orthonormal. Also returns the first carriage norm, which is `‖X‖_F`.
    fn orthogonalized(&self) -> (Self, T) {
        let mut cores = self.cores.clone();
        for k in (1..cores.len()).rev() {
            let c = &cores[k];
            let (n, r1) = (c.n, c.r1);
            let f = qr(&c.right_unfolding().transpose());
            let rt = f.r.transpose();
            cores[k] = Carriage::from_right(f.q.transpose(), n, r1);
            let prev = &cores[k - 1];
            let (pr0, pn) = (prev.r0, prev.n);
            let merged = prev.left_unfolding().matmul(&rt).expect("ranks agree");
            cores[k - 1] = Carriage::from_left(merged, pr0, pn);
        }
        let norm = crate::linalg::norm2(&cores[0].data);
        (Self { cores }, norm)
    }

    /// Recompression to relative accuracy `tol·√(d−1)` at most; ranks never grow.
    pub fn round(&self, tol: T) -> Result<Self> {
        if tol < T::zero() {
            return Err(Error::InvalidArgument(format!("negative tolerance {tol}")));
        }
        let d = self.ndim();
        if d == 1 {
            return Ok(self.clone());
        }
        let (orth, norm) = self.orthogonalized();
        let delta = tol * norm / T::from_usize_lossy(d - 1).sqrt();
        let mut cores = orth.cores;
        for k in 0..d - 1 {
            let (r0, n, _) = cores[k].dims();
            let f = svd(&cores[k].left_unfolding())?;
            let r = truncation_rank(&f.s, delta).max(1);
            let f = f.truncate(r);
            cores[k] = Carriage::from_left(f.u, r0, n);
            let sv = Matrix::from_fn(r, f.v.rows(), |a, j| f.s[a] * f.v[(j, a)]);
            let next = &cores[k + 1];
            let (nn, nr1) = (next.n, next.r1);
            let merged = sv.matmul(&next.right_unfolding())?;
            cores[k + 1] = Carriage::from_right(merged, nn, nr1);
        }
        Self::new(cores)
    }

    pub fn cast<U: Scalar>(&self) -> TtTensor<U> {
        TtTensor {
            cores: self
                .cores
                .iter()
                .map(|c| Carriage {
                    r0: c.r0,
                    n: c.n,
                    r1: c.r1,
                    data: c.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
                })
                .collect(),
        }
    }
}
