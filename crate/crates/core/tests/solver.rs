mod common;

use fracsum::bench::laplacian_problem;
use fracsum::error::Error;
use fracsum::expsum::{ExpSum, ExpSumParams};
use fracsum::linalg::{symmetric_eigen, Matrix};
use fracsum::problems::{inv_linear_tt, laplacian_1d, sample_rhs, RhsKind, RhsSpec, RHS_TT_TOL};
use fracsum::solver::{
    apply_operator, exp_kron_apply, factor_exponentials, oracle_apply, solve_cp, solve_dense, solve_dense_direct,
    solve_tt, solve_tucker, tt_operator_fiber, KroneckerSum, DEFAULT_MEMORY_CAP,
};
use fracsum::tensor::{hosvd, CpTensor, DenseTensor, HosvdTarget, TtTensor};
use proptest::prelude::*;
use rand::Rng;

use common::{expm_neg, matvec, random_cp, random_spd, rel_diff, rng};

fn random_dense(seed: u64, shape: &[usize]) -> DenseTensor<f64> {
    let mut r = rng(seed);
    DenseTensor::from_fn(shape.to_vec(), |_| r.random_range(-1.0..1.0)).unwrap()
}

fn random_ks(seed: u64, shape: &[usize]) -> KroneckerSum<f64> {
    let mut r = rng(seed);
    KroneckerSum::new(shape.iter().map(|&n| random_spd(&mut r, n, 0.5, 10.0)).collect()).unwrap()
}

#[test]
fn factor_exponentials_scalar_case() {
    let ks = KroneckerSum::uniform(Matrix::identity(1), 3).unwrap();
    assert_eq!(ks.lambda_min(), 3.0);
    let es = ExpSum::<f64>::new(0.5, 1e-4).unwrap();
    let e = factor_exponentials(&ks, &es);
    for (j, &beta) in es.exponents().iter().enumerate() {
        for factor in &e {
            assert!((factor[j][(0, 0)] - (-beta / 3.0).exp()).abs() < 1e-15);
        }
    }
}

#[test]
fn factor_exponentials_diagonal_case() {
    let ks = KroneckerSum::new(vec![Matrix::from_diagonal(&[1.0, 2.0])]).unwrap();
    let beta = std::f64::consts::LN_2;
    let h = 0.3;
    // choose the single node so that its exponent is log 2
    let es = ExpSum::build(ExpSumParams::from_counts(1.0 - 1e-12, h, 0, 0).unwrap());
    assert!((es.exponents()[0] - beta).abs() < 1e-9);
    let e = &factor_exponentials(&ks, &es)[0][0];
    assert!((e[(0, 0)] - 0.5).abs() < 1e-9);
    assert!((e[(1, 1)] - 0.25).abs() < 1e-9);
    assert_eq!(e[(0, 1)], 0.0);
}

#[test]
fn factor_exponentials_match_taylor() {
    let ks = random_ks(1, &[5, 4]);
    let es = ExpSum::<f64>::new(0.6, 1e-3).unwrap();
    let e = factor_exponentials(&ks, &es);
    let lm = ks.lambda_min();
    for (i, a) in ks.factors().iter().enumerate() {
        for (j, &beta) in es.exponents().iter().enumerate().step_by(3) {
            let reference = expm_neg(a, beta / lm);
            assert!(e[i][j].sub(&reference).max_abs() <= 1e-12, "mode {i}, term {j}");
        }
    }
}

#[test]
fn one_mode_reduces_to_matrix_power() {
    let ks = random_ks(2, &[7]);
    let c = random_dense(3, &[7]);
    let es = ExpSum::new(0.3, 1e-10).unwrap();
    let (x, rep) = solve_dense(&ks, &c, &es).unwrap();
    let exact = oracle_apply(&ks, &c, 0.3).unwrap();
    assert!(x.sub(&exact).unwrap().frobenius_norm() <= rep.error_bound);
    assert!(x.relative_error(&exact).unwrap() < 1e-9);
}

#[test]
fn eigenvector_tensor_is_scaled() {
    let ks = random_ks(4, &[4, 5, 3]);
    let vecs: Vec<Vec<f64>> = ks.spectra().iter().map(|e| e.vectors.col(1).to_vec()).collect();
    let lambda: f64 = ks.spectra().iter().map(|e| e.values[1]).sum();
    let c = DenseTensor::outer(&[&vecs[0], &vecs[1], &vecs[2]]).unwrap();
    let es = ExpSum::new(0.7, 1e-10).unwrap();
    let (x, _) = solve_dense(&ks, &c, &es).unwrap();
    let expected = c.clone().scaled(lambda.powf(-0.7));
    assert!(x.relative_error(&expected).unwrap() < 1e-9);
}

#[test]
fn poisson_desk_scale_within_bound() {
    let (ks, grids) = laplacian_problem(3, 32, DEFAULT_MEMORY_CAP).unwrap();
    let c = sample_rhs(&RhsSpec::new(RhsKind::InvLinear, 3, 0).unwrap(), &grids, DEFAULT_MEMORY_CAP)
        .unwrap()
        .to_dense(DEFAULT_MEMORY_CAP)
        .unwrap();
    let exact = oracle_apply(&ks, &c, 0.4).unwrap();
    for eps in [1e-3, 1e-6, 1e-9] {
        let es = ExpSum::new(0.4, eps).unwrap();
        let (x, rep) = solve_dense(&ks, &c, &es).unwrap();
        let rel = x.relative_error(&exact).unwrap();
        assert!(rel <= rep.error_bound / exact.frobenius_norm(), "eps = {eps}");
    }
}

#[test]
fn spectral_and_direct_routes_agree() {
    let ks = random_ks(5, &[5, 6, 4]);
    let c = random_dense(6, &[5, 6, 4]);
    let es = ExpSum::new(0.5, 1e-6).unwrap();
    let (a, ra) = solve_dense(&ks, &c, &es).unwrap();
    let (b, rb) = solve_dense_direct(&ks, &c, &es).unwrap();
    assert!(a.relative_error(&b).unwrap() < 1e-12);
    assert_eq!(ra.error_bound, rb.error_bound);
}

#[test]
fn cp_solution_has_n_times_r_terms() {
    let (ks, _) = laplacian_problem(3, 16, DEFAULT_MEMORY_CAP).unwrap();
    let c = random_cp(&mut rng(7), &[16, 16, 16], 2);
    for n_terms in [1, 7, 30] {
        let es = ExpSum::with_terms(0.5, n_terms).unwrap();
        let (x, rep) = solve_cp(&ks, &c, &es).unwrap();
        assert_eq!(x.rank(), 2 * n_terms);
        assert_eq!(rep.ranks, vec![2 * n_terms]);
        let (reference, _) = solve_dense(&ks, &c.to_dense(), &es).unwrap();
        assert!(x.to_dense().relative_error(&reference).unwrap() < 1e-12, "N = {n_terms}");
    }
}

#[test]
fn single_term_cp_solution() {
    let ks = random_ks(8, &[3, 4]);
    let c = CpTensor::rank_one(&[&[1.0, 0.0, 2.0], &[1.0, -1.0, 0.5, 1.0]]).unwrap();
    let es = ExpSum::with_terms(0.5, 1).unwrap();
    let (x, _) = solve_cp(&ks, &c, &es).unwrap();
    let (w, beta) = (es.weights()[0], es.exponents()[0]);
    let lm = ks.lambda_min();
    let mats: Vec<Matrix<f64>> = ks.factors().iter().map(|a| expm_neg(a, beta / lm)).collect();
    let expected = c.to_dense().multi_mode_product(&mats).unwrap().scaled(w * lm.powf(-0.5));
    assert!(x.to_dense().relative_error(&expected).unwrap() < 1e-12);
}

#[test]
fn tucker_ranks_accumulate() {
    let ks = random_ks(9, &[8, 8, 8]);
    let c = hosvd(&random_cp(&mut rng(10), &[8, 8, 8], 1).to_dense(), &HosvdTarget::Ranks(vec![1; 3]))
        .unwrap()
        .tucker;
    let es = ExpSum::with_terms(0.5, 3).unwrap();
    let (x, rep) = solve_tucker(&ks, &c, &es, 0.0).unwrap();
    assert!(x.ranks().iter().all(|&r| r <= 3));
    assert_eq!(rep.ranks, x.ranks());
    let (reference, _) = solve_dense(&ks, &c.to_dense(), &es).unwrap();
    assert!(x.to_dense().relative_error(&reference).unwrap() < 1e-12);
}

#[test]
fn tucker_truncation_shrinks_laplacian_ranks() {
    let (ks, grids) = laplacian_problem(3, 32, DEFAULT_MEMORY_CAP).unwrap();
    let dense = sample_rhs(&RhsSpec::new(RhsKind::RandomRank1, 3, 0).unwrap(), &grids, DEFAULT_MEMORY_CAP)
        .unwrap()
        .to_dense(DEFAULT_MEMORY_CAP)
        .unwrap();
    let c = hosvd(&dense, &HosvdTarget::Ranks(vec![1; 3])).unwrap().tucker;
    let es = ExpSum::with_terms(0.5, 15).unwrap();
    let (x, rep) = solve_tucker(&ks, &c, &es, 1e-10).unwrap();
    assert!(x.ranks().iter().all(|&r| r < 15), "{:?}", x.ranks());
    let (full, _) = solve_tucker(&ks, &c, &es, 0.0).unwrap();
    let diff = x.to_dense().sub(&full.to_dense()).unwrap().frobenius_norm();
    assert!(diff <= rep.rounding_bound + 1e-14 * full.to_dense().frobenius_norm());
}

#[test]
fn tt_single_term_keeps_ranks() {
    let ks = random_ks(11, &[4, 5, 3, 4]);
    let c = TtTensor::from_cp(&random_cp(&mut rng(12), &[4, 5, 3, 4], 2)).unwrap();
    let es = ExpSum::with_terms(0.5, 1).unwrap();
    let (x, _) = solve_tt(&ks, &c, &es, 0.0).unwrap();
    assert_eq!(x.ranks(), c.ranks());
}

#[test]
fn tt_four_modes_against_oracle() {
    let (ks, grids) = laplacian_problem(4, 8, DEFAULT_MEMORY_CAP).unwrap();
    let c = inv_linear_tt(&grids, RHS_TT_TOL, DEFAULT_MEMORY_CAP).unwrap();
    let exact = oracle_apply(&ks, &c.to_dense(), 0.5).unwrap();
    let es = ExpSum::new(0.5, 1e-8).unwrap();
    for tol in [1e-10, 1e-6] {
        let (x, rep) = solve_tt(&ks, &c, &es, tol).unwrap();
        let err = x.to_dense().sub(&exact).unwrap().frobenius_norm();
        assert!(err <= rep.error_bound, "round_tol = {tol}");
        assert!(rep.rounding_bound > 0.0);
        assert!(x.max_rank() <= es.len() * c.max_rank());
    }
}

#[test]
fn tt_six_modes_fiber_residual() {
    // 𝒜^{-1/2}(𝒜^{-1/2} c) ≈ 𝒜^{-1} c, so applying 𝒜 must give back c
    let (ks, grids) = laplacian_problem(6, 16, DEFAULT_MEMORY_CAP).unwrap();
    let c = inv_linear_tt(&grids, RHS_TT_TOL, DEFAULT_MEMORY_CAP).unwrap();
    let es = ExpSum::new(0.5, 1e-7).unwrap();
    let (half, _) = solve_tt(&ks, &c, &es, 1e-9).unwrap();
    let (full, _) = solve_tt(&ks, &half, &es, 1e-9).unwrap();
    assert!(full.ranks().iter().all(|&r| (1..200).contains(&r)), "{:?}", full.ranks());
    let mut r = rng(13);
    let mut worst: f64 = 0.0;
    for sample in 0..12 {
        let idx: Vec<usize> = (0..6).map(|_| r.random_range(0..16)).collect();
        let mode = sample % 6;
        let got = tt_operator_fiber(&ks, &full, &idx, mode).unwrap();
        let want: Vec<f64> = (0..16)
            .map(|p| {
                let mut at = idx.clone();
                at[mode] = p;
                c.entry(&at)
            })
            .collect();
        worst = worst.max(rel_diff(&got, &want));
    }
    assert!(worst < 1e-4, "worst fiber residual {worst:.3e}");
}

#[test]
fn oracle_classical_cases() {
    let mut r = rng(14);
    let a = random_spd(&mut r, 5, 0.5, 4.0);
    let ks = KroneckerSum::new(vec![a.clone(), a.clone()]).unwrap();
    let c = random_dense(15, &[5, 5]);
    assert!(oracle_apply(&ks, &c, 0.0).unwrap().relative_error(&c).unwrap() < 1e-14);
    let x = oracle_apply(&ks, &c, 1.0).unwrap();
    let residual = apply_operator(&ks, &x).unwrap().sub(&c).unwrap().frobenius_norm() / c.frobenius_norm();
    assert!(residual <= 1e-10, "{residual:e}");
    let xm = x.unfold(0).unwrap();
    let sylvester = a.matmul(&xm).unwrap();
    let sylvester = Matrix::from_fn(5, 5, |i, j| sylvester[(i, j)] + xm.matmul(&a.transpose()).unwrap()[(i, j)]);
    assert!(sylvester.sub(&c.unfold(0).unwrap()).frobenius_norm() <= 1e-10 * c.frobenius_norm());
}

#[test]
fn oracle_golden_laplacian() {
    // 40-digit eigendecomposition of the 9×9 operator
    let ks = KroneckerSum::uniform(laplacian_1d(3).unwrap(), 2).unwrap();
    let c = DenseTensor::from_fn(vec![3, 3], |i| (1 + i[0] + 2 * i[1]) as f64).unwrap();
    let want = [
        0.721_992_613_543_832_3,
        1.218_925_094_605_248,
        1.315_734_641_862_858_9,
        1.549_756_604_014_629_5,
        2.225_211_312_044_744,
        2.211_419_622_833_393,
        1.909_476_670_181_885_5,
        2.542_251_132_242_774_6,
        2.503_218_698_500_912,
    ];
    let x = oracle_apply(&ks, &c, 0.5).unwrap();
    assert!(rel_diff(x.values(), &want) < 1e-14);
}

#[test]
fn oracle_against_materialized_operator() {
    let ks = random_ks(16, &[6, 6]);
    let c = random_dense(17, &[6, 6]);
    let eig = symmetric_eigen(&ks.to_matrix().unwrap()).unwrap();
    for alpha in [0.25, 0.5, 0.9] {
        let power = eig.apply_function(|l| l.powf(-alpha));
        let want = matvec(&power, c.values());
        let got = oracle_apply(&ks, &c, alpha).unwrap();
        assert!(rel_diff(got.values(), &want) < 1e-11, "α = {alpha}");
    }
}

#[test]
fn kronecker_exponential() {
    let ks = random_ks(18, &[4, 4]);
    let c = random_dense(19, &[4, 4]);
    assert!(exp_kron_apply(&ks, &c, 0.0).unwrap().relative_error(&c).unwrap() < 1e-15);
    let big = ks.to_matrix().unwrap();
    for t in [0.1, 0.7] {
        let want = matvec(&expm_neg(&big, t), c.values());
        let got = exp_kron_apply(&ks, &c, -t).unwrap();
        assert!(rel_diff(got.values(), &want) < 1e-11, "t = {t}");
    }
    let two_steps = exp_kron_apply(&ks, &exp_kron_apply(&ks, &c, -0.2).unwrap(), -0.3).unwrap();
    let one_step = exp_kron_apply(&ks, &c, -0.5).unwrap();
    assert!(two_steps.relative_error(&one_step).unwrap() < 1e-11);
}

#[test]
fn invalid_operators_are_rejected() {
    let nonsym = Matrix::from_rows(&[&[2.0, 1.0], &[0.0, 2.0]]);
    assert!(matches!(KroneckerSum::new(vec![nonsym]), Err(Error::InvalidArgument(_) | Error::NotSpd(_))));
    let indefinite = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
    assert!(matches!(KroneckerSum::new(vec![indefinite]), Err(Error::NotSpd(_))));
    let ks = random_ks(20, &[3, 3]);
    let es = ExpSum::new(0.5, 1e-4).unwrap();
    assert!(solve_dense(&ks, &random_dense(21, &[3, 4]), &es).is_err());
    assert!(oracle_apply(&ks, &random_dense(22, &[3, 3]), -0.5).is_err());
}

#[test]
fn memory_cap_is_enforced() {
    let ks = random_ks(23, &[4, 4, 4]).with_memory_cap(32);
    let es = ExpSum::new(0.5, 1e-4).unwrap();
    let c = random_dense(24, &[4, 4, 4]);
    assert!(matches!(solve_dense(&ks, &c, &es), Err(Error::MemoryCap { .. })));
    assert!(matches!(oracle_apply(&ks, &c, 0.5), Err(Error::MemoryCap { .. })));
    let cp = random_cp(&mut rng(25), &[4, 4, 4], 1);
    assert!(solve_cp(&ks, &cp, &es).is_ok());
}

#[test]
fn f32_solve_tracks_f64() {
    let ks = random_ks(26, &[5, 4, 3]);
    let c = random_cp(&mut rng(27), &[5, 4, 3], 1);
    let (x64, _) = solve_cp(&ks, &c, &ExpSum::new(0.5, 1e-5).unwrap()).unwrap();
    let ks32 = KroneckerSum::new(ks.factors().iter().map(|a| a.cast::<f32>()).collect()).unwrap();
    let (x32, _) = solve_cp(&ks32, &c.cast::<f32>(), &ExpSum::new(0.5f32, 1e-5).unwrap()).unwrap();
    let y: DenseTensor<f64> = x32.to_dense().cast();
    assert!(y.relative_error(&x64.to_dense()).unwrap() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scaling_the_operator_scales_the_solution(seed in 0u64..500, s in 0.05f64..20.0, alpha in 0.1f64..0.9) {
        let ks = random_ks(seed, &[4, 3, 3]);
        let c = random_dense(seed + 1, &[4, 3, 3]);
        let es = ExpSum::new(alpha, 1e-6).unwrap();
        let (x, _) = solve_dense(&ks, &c, &es).unwrap();
        let (y, _) = solve_dense(&ks.scaled(s).unwrap(), &c, &es).unwrap();
        prop_assert!(y.relative_error(&x.scaled(s.powf(-alpha))).unwrap() < 1e-12);
    }

    #[test]
    fn solve_is_linear_in_rhs(seed in 0u64..500, s in -2.0f64..2.0) {
        let ks = random_ks(seed, &[3, 4]);
        let a = random_dense(seed + 1, &[3, 4]);
        let b = random_dense(seed + 2, &[3, 4]);
        let es = ExpSum::new(0.5, 1e-6).unwrap();
        let combined = solve_dense(&ks, &a.add(&b.clone().scaled(s)).unwrap(), &es).unwrap().0;
        let separate = solve_dense(&ks, &a, &es).unwrap().0.add(&solve_dense(&ks, &b, &es).unwrap().0.scaled(s)).unwrap();
        prop_assert!(combined.sub(&separate).unwrap().frobenius_norm() <= 1e-12 * (1.0 + separate.frobenius_norm()));
    }

    #[test]
    fn formats_agree(seed in 0u64..500, n_terms in 1usize..40) {
        let ks = random_ks(seed, &[5, 4, 3]);
        let c = random_cp(&mut rng(seed + 1), &[5, 4, 3], 2);
        let es = ExpSum::with_terms(0.5, n_terms).unwrap();
        let (reference, _) = solve_dense(&ks, &c.to_dense(), &es).unwrap();
        let cp = solve_cp(&ks, &c, &es).unwrap().0.to_dense();
        let tt = solve_tt(&ks, &TtTensor::from_cp(&c).unwrap(), &es, 0.0).unwrap().0.to_dense();
        prop_assert!(cp.relative_error(&reference).unwrap() < 1e-11);
        prop_assert!(tt.relative_error(&reference).unwrap() < 1e-11);
    }

    #[test]
    fn oracle_composes(seed in 0u64..500, a in 0.1f64..0.6, b in 0.1f64..0.6) {
        let ks = random_ks(seed, &[3, 3, 2]);
        let c = random_dense(seed + 1, &[3, 3, 2]);
        let two = oracle_apply(&ks, &oracle_apply(&ks, &c, a).unwrap(), b).unwrap();
        let one = oracle_apply(&ks, &c, a + b).unwrap();
        prop_assert!(two.relative_error(&one).unwrap() < 1e-12);
    }
}
