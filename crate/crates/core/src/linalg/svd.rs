//! Thin singular value decomposition by one-sided (Hestenes) Jacobi.
//!
//! Tall inputs are first reduced with a Householder QR so the rotations run
//! on a square factor. Singular values come out with high relative accuracy,
//! which the rank-truncation code relies on.

use super::matrix::{dot, norm2, Matrix};
use super::qr::qr;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 80;

/// `A = U·diag(s)·Vᵀ` with `s` sorted in descending order.
#[derive(Debug, Clone)]
pub struct Svd<T: Scalar> {
    pub u: Matrix<T>,
    pub s: Vec<T>,
    pub v: Matrix<T>,
}

impl<T: Scalar> Svd<T> {
    /// Keeps the leading `k` singular triplets.
    pub fn truncate(mut self, k: usize) -> Self {
        let k = k.min(self.s.len());
        self.u = self.u.leading_cols(k);
        self.v = self.v.leading_cols(k);
        self.s.truncate(k);
        self
    }
}

pub fn svd<T: Scalar>(a: &Matrix<T>) -> Result<Svd<T>> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        let t = svd(&a.transpose())?;
        return Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    if n == 0 {
        return Ok(Svd {
            u: Matrix::zeros(m, 0),
            s: vec![],
            v: Matrix::zeros(0, 0),
        });
    }
    if m > n {
        let f = qr(a);
        let inner = jacobi_square(f.r)?;
        return Ok(Svd {
            u: f.q.matmul(&inner.u)?,
            s: inner.s,
            v: inner.v,
        });
    }
    jacobi_square(a.clone())
}

fn jacobi_square<T: Scalar>(mut b: Matrix<T>) -> Result<Svd<T>> {
    let n = b.cols();
    let m = b.rows();
    let mut v = Matrix::<T>::identity(n);
    let eps = T::epsilon();
    let tiny = T::min_positive_value();
    // Columns below this squared norm are numerically zero relative to ‖B‖.
    let negligible = {
        let f = b.frobenius_norm() * eps;
        f * f
    };

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let alpha = dot(b.col(p), b.col(p));
                let beta = dot(b.col(q), b.col(q));
                let gamma = dot(b.col(p), b.col(q));
                if gamma.abs() <= eps * (alpha * beta).sqrt()
                    || gamma.abs() < tiny
                    || alpha.min(beta) <= negligible
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_cols(&mut b, p, q, c, s);
                rotate_cols(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<(T, usize)> = (0..n).map(|j| (norm2(b.col(j)), j)).collect();
    order.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut u = Matrix::zeros(m, n);
    let mut vs = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut zero_cols = Vec::new();
    for (k, &(sigma, j)) in order.iter().enumerate() {
        s.push(sigma);
        vs.col_mut(k).copy_from_slice(v.col(j));
        if sigma * sigma > negligible {
            let inv = T::one() / sigma;
            for (dst, &src) in u.col_mut(k).iter_mut().zip(b.col(j)) {
                *dst = src * inv;
            }
        } else {
            zero_cols.push(k);
        }
    }
    complete_orthonormal(&mut u, &zero_cols);
    Ok(Svd { u, s, v: vs })
}

fn rotate_cols<T: Scalar>(m: &mut Matrix<T>, p: usize, q: usize, c: T, s: T) {
    let rows = m.rows();
    let data = m.as_mut_slice();
    let (lo, hi) = data.split_at_mut(q * rows);
    let cp = &mut lo[p * rows..(p + 1) * rows];
    let cq = &mut hi[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Fills the listed columns with unit vectors orthogonal to all other columns.
fn complete_orthonormal<T: Scalar>(u: &mut Matrix<T>, missing: &[usize]) {
    let m = u.rows();
    let n = u.cols();
    for &k in missing {
        for e in 0..m {
            let mut cand = vec![T::zero(); m];
            cand[e] = T::one();
            for _ in 0..2 {
                for j in 0..n {
                    if j == k || (missing.contains(&j) && j > k) {
                        continue;
                    }
                    let proj = dot(&cand, u.col(j));
                    for (c, &uj) in cand.iter_mut().zip(u.col(j)) {
                        *c -= proj * uj;
                    }
                }
            }
            let nrm = norm2(&cand);
            if nrm > T::lit(0.5) {
                for (dst, c) in u.col_mut(k).iter_mut().zip(cand) {
                    *dst = c / nrm;
                }
                break;
            }
        }
    }
}

/// Smallest rank `r ≥ 1` whose discarded tail `sqrt(Σ_{i≥r} s_i²)` is at most `delta`.
pub fn truncation_rank<T: Scalar>(s: &[T], delta: T) -> usize {
    if s.is_empty() {
        return 0;
    }
    let mut tail = T::zero();
    let mut r = s.len();
    while r > 1 {
        let next = tail + s[r - 1] * s[r - 1];
        if next.sqrt() > delta {
            break;
        }
        tail = next;
        r -= 1;
    }
    r
}
