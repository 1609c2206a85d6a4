use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solves `X·G = B` for symmetric positive semidefinite `G` (k×k), adding
/// `ridge · max(1, max diag)` to the diagonal before a Cholesky factorization.
///
/// `B` has `k` columns; the result has the shape of `B`.
pub fn solve_spd_right<T: Scalar>(g: &Matrix<T>, b: &Matrix<T>, ridge: T) -> Result<Matrix<T>> {
    let k = g.rows();
    if !g.is_square() || b.cols() != k {
        return Err(Error::DimensionMismatch(format!(
            "right solve with {}x{} gram and {}x{} rhs",
            g.rows(),
            g.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let diag_max = (0..k).fold(T::one(), |m, i| m.max(g[(i, i)]));
    let shift = ridge * diag_max;
    // Lower Cholesky factor L with G + shift·I = L·Lᵀ.
    let mut l = Matrix::zeros(k, k);
    for j in 0..k {
        let mut d = g[(j, j)] + shift;
        for p in 0..j {
            d -= l[(j, p)] * l[(j, p)];
        }
        if d <= T::zero() || !d.is_finite() {
            return Err(Error::NotSpd(format!("gram pivot {j} is {d}")));
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..k {
            let mut s = g[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)];
            }
            l[(i, j)] = s / d;
        }
    }
    // X·G = B is G·xᵣ = bᵣ for every row r, since G is symmetric.
    let m = b.rows();
    let mut x = b.clone();
    for r in 0..m {
        let mut y = vec![T::zero(); k];
        for i in 0..k {
            let mut s = x[(r, i)];
            for p in 0..i {
                s -= l[(i, p)] * y[p];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..k).rev() {
            let mut s = y[i];
            for p in (i + 1)..k {
                s -= l[(p, i)] * y[p];
            }
            y[i] = s / l[(i, i)];
        }
        for i in 0..k {
            x[(r, i)] = y[i];
        }
    }
    Ok(x)
}
