#![allow(dead_code)]

use fracsum::linalg::{qr, Matrix};
use fracsum::tensor::CpTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `Q diag(λ) Qᵀ` with a random orthogonal `Q` and `λ` uniform on `[lo, hi]`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Matrix<f64> {
    let q = qr(&gaussian_matrix(rng, n, n)).q;
    let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    let scaled = Matrix::from_fn(n, n, |i, j| q[(i, j)] * lambda[j]);
    let a = scaled.matmul(&q.transpose()).unwrap();
    Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

pub fn random_cp(rng: &mut ChaCha8Rng, shape: &[usize], rank: usize) -> CpTensor<f64> {
    CpTensor::new(shape.iter().map(|&n| gaussian_matrix(rng, n, rank)).collect()).unwrap()
}

/// `e^{-tA}` by scaling and squaring of a truncated Taylor series.
///
/// Shares no code with the eigendecomposition route.
pub fn expm_neg(a: &Matrix<f64>, t: f64) -> Matrix<f64> {
    let n = a.rows();
    let norm = a.frobenius_norm() * t.abs();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let s = -t / 2f64.powi(squarings);
    let mut m = a.clone();
    m.scale(s);
    let mut result = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=30 {
        term = term.matmul(&m).unwrap();
        term.scale(1.0 / k as f64);
        for (r, x) in result.as_mut_slice().iter_mut().zip(term.as_slice()) {
            *r += x;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result).unwrap();
    }
    result
}

pub fn matvec(a: &Matrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..a.rows()).map(|i| (0..a.cols()).map(|j| a[(i, j)] * x[j]).sum()).collect()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}
