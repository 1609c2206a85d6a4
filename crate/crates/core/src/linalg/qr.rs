use super::matrix::{norm2, Matrix};
use crate::scalar::Scalar;

/// Thin Householder QR factorization `A = Q·R`.
///
/// For `A` of size `m×n` and `k = min(m, n)`, `q` is `m×k` with orthonormal
/// columns and `r` is `k×n` upper trapezoidal.
#[derive(Debug, Clone)]
pub struct Qr<T: Scalar> {
    pub q: Matrix<T>,
    pub r: Matrix<T>,
}

pub fn qr<T: Scalar>(a: &Matrix<T>) -> Qr<T> {
    let (m, n) = (a.rows(), a.cols());
    let k = m.min(n);
    let mut work = a.clone();
    // Householder vectors, stored separately so `work` can hold R.
    let mut reflectors: Vec<(Vec<T>, T)> = Vec::with_capacity(k);

    for j in 0..k {
        let x = &work.col(j)[j..];
        let alpha = norm2(x);
        let mut v = x.to_vec();
        if alpha == T::zero() {
            reflectors.push((v, T::zero()));
            continue;
        }
        let sign = if v[0] >= T::zero() { T::one() } else { -T::one() };
        v[0] += sign * alpha;
        let vnorm2: T = v.iter().map(|&t| t * t).sum();
        let tau = T::lit(2.0) / vnorm2;
        for c in j..n {
            let col = &mut work.col_mut(c)[j..];
            let s = tau * col.iter().zip(&v).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
            for (ci, &vi) in col.iter_mut().zip(&v) {
                *ci -= s * vi;
            }
        }
        reflectors.push((v, tau));
    }

    let r = Matrix::from_fn(k, n, |i, j| if i <= j { work[(i, j)] } else { T::zero() });

    // Accumulate Q = H_0 H_1 ... H_{k-1} applied to the first k columns of I.
    let mut q = Matrix::zeros(m, k);
    for i in 0..k {
        q[(i, i)] = T::one();
    }
    for (j, (v, tau)) in reflectors.iter().enumerate().rev() {
        if *tau == T::zero() {
            continue;
        }
        for c in 0..k {
            let col = &mut q.col_mut(c)[j..];
            let s = *tau * col.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
            for (ci, &vi) in col.iter_mut().zip(v) {
                *ci -= s * vi;
            }
        }
    }
    Qr { q, r }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: &Matrix<f64>) {
        let Qr { q, r } = qr(a);
        let k = a.rows().min(a.cols());
        assert_eq!((q.rows(), q.cols()), (a.rows(), k));
        assert_eq!((r.rows(), r.cols()), (k, a.cols()));
        let back = q.matmul(&r).unwrap();
        assert!(back.sub(a).max_abs() < 1e-13 * (1.0 + a.max_abs()));
        let qtq = q.tr_matmul(&q).unwrap();
        assert!(qtq.sub(&Matrix::identity(k)).max_abs() < 1e-14);
        for j in 0..r.cols() {
            for i in (j + 1)..r.rows() {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn tall_wide_and_rank_deficient() {
        check(&Matrix::from_fn(7, 3, |i, j| ((i * 3 + j * 5) % 7) as f64 - 2.5));
        check(&Matrix::from_fn(3, 8, |i, j| ((i * 2 + j * 3) % 5) as f64 + 0.5));
        // rank one, with an exactly zero column
        check(&Matrix::from_fn(5, 4, |i, j| if j == 1 { 0.0 } else { (i + 1) as f64 * (j + 1) as f64 }));
    }
}
