use fracsum::problems::{
    inv_linear_cp, inv_linear_tt, laplacian_1d, laplacian_1d_eigenvalues, sample_function, sample_rhs, Grid1D, Rhs,
    RhsKind, RhsSpec,
};
use fracsum::linalg::symmetric_eigen;
use fracsum::solver::DEFAULT_MEMORY_CAP;

#[test]
fn three_point_laplacian() {
    let a = laplacian_1d::<f64>(3).unwrap();
    let want = [[8.0, -4.0, 0.0], [-4.0, 8.0, -4.0], [0.0, -4.0, 8.0]];
    for (i, row) in want.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            assert_eq!(a[(i, j)], v);
        }
    }
}

#[test]
fn laplacian_spectrum_is_analytic() {
    for n in [2, 5, 16, 33] {
        let numeric = symmetric_eigen(&laplacian_1d::<f64>(n).unwrap()).unwrap().values;
        let analytic = laplacian_1d_eigenvalues::<f64>(n).unwrap();
        let h = 1.0 / (n - 1) as f64;
        for (k, (x, y)) in numeric.iter().zip(&analytic).enumerate() {
            let s = ((k + 1) as f64 * std::f64::consts::PI / (2.0 * (n + 1) as f64)).sin();
            assert!((y - 4.0 / (h * h) * s * s).abs() <= 1e-12 * y);
            assert!((x - y).abs() <= 1e-10 * y, "n = {n}, k = {k}");
        }
    }
}

#[test]
fn laplacian_is_positive_definite() {
    for n in [2, 64, 1000, 4096] {
        let l = laplacian_1d_eigenvalues::<f64>(n).unwrap();
        assert!(l[0] > 0.0);
        assert!(l.windows(2).all(|w| w[0] < w[1]));
    }
    assert!(laplacian_1d::<f64>(1).is_err());
}

#[test]
fn grid_points() {
    let g = Grid1D::<f64>::new(5).unwrap();
    assert_eq!(g.n(), 5);
    assert_eq!(g.h(), 0.25);
    assert_eq!(g.points(), &[0.25, 0.5, 0.75, 1.0, 1.25]);
    assert!(Grid1D::<f64>::new(1).is_err());
}

#[test]
fn separable_rhs_is_rank_one() {
    let grids = vec![Grid1D::<f64>::new(4).unwrap(); 3];
    let rhs = sample_rhs(&RhsSpec::new(RhsKind::Separable, 3, 0).unwrap(), &grids, DEFAULT_MEMORY_CAP).unwrap();
    let Rhs::Cp(cp) = &rhs else { panic!("separable right-hand sides are CP") };
    assert_eq!(cp.rank(), 1);
    let x = rhs.to_dense(DEFAULT_MEMORY_CAP).unwrap();
    let p = grids[0].points();
    for (i, j, k) in [(0, 0, 0), (1, 2, 3), (3, 1, 2)] {
        let want = p[i].sin() * p[j].cos() * p[k].exp();
        assert!((x.get(&[i, j, k]) - want).abs() <= 1e-15 * want.abs().max(1.0));
    }
    assert!(RhsSpec::new(RhsKind::Separable, 4, 0).is_err());
}

#[test]
fn inverse_linear_first_point() {
    let grids = vec![Grid1D::<f64>::new(9).unwrap(); 3];
    let x = sample_rhs(&RhsSpec::new(RhsKind::InvLinear, 3, 0).unwrap(), &grids, DEFAULT_MEMORY_CAP)
        .unwrap()
        .to_dense(DEFAULT_MEMORY_CAP)
        .unwrap();
    let h = grids[0].h();
    assert_eq!(x.get(&[0, 0, 0]), 1.0 / (1.0 + 3.0 * h));
}

#[test]
fn random_rank_one_is_reproducible() {
    let grids = vec![Grid1D::<f64>::new(6).unwrap(); 3];
    let spec = RhsSpec::new(RhsKind::RandomRank1, 3, 42).unwrap();
    let a = sample_rhs(&spec, &grids, DEFAULT_MEMORY_CAP).unwrap().to_dense(DEFAULT_MEMORY_CAP).unwrap();
    let b = sample_rhs(&spec, &grids, DEFAULT_MEMORY_CAP).unwrap().to_dense(DEFAULT_MEMORY_CAP).unwrap();
    assert_eq!(a, b);
    let other = RhsSpec::new(RhsKind::RandomRank1, 3, 43).unwrap();
    let c = sample_rhs(&other, &grids, DEFAULT_MEMORY_CAP).unwrap().to_dense(DEFAULT_MEMORY_CAP).unwrap();
    assert_ne!(a, c);
}

#[test]
fn kind_names_round_trip() {
    for kind in [RhsKind::InvLinear, RhsKind::Separable, RhsKind::RandomRank1] {
        assert_eq!(kind.to_string().parse::<RhsKind>().unwrap(), kind);
    }
    assert!("poisson".parse::<RhsKind>().is_err());
}

#[test]
fn dense_sampling_respects_cap() {
    let grids = vec![Grid1D::<f64>::new(8).unwrap(); 3];
    assert!(sample_function(&grids, |_| 1.0, 100).is_err());
    assert!(sample_function(&grids, |_| 1.0, 512).is_ok());
}

#[test]
fn inverse_linear_expansion_is_accurate() {
    let grids = vec![Grid1D::<f64>::new(10).unwrap(); 3];
    let dense = sample_function(&grids, |p| 1.0 / (1.0 + p.iter().sum::<f64>()), DEFAULT_MEMORY_CAP).unwrap();
    let cp = inv_linear_cp(&grids, 1e-10).unwrap();
    assert!(cp.to_dense().relative_error(&dense).unwrap() <= 1e-10);
    // a cap below n^d forces the expansion route
    let tt = inv_linear_tt(&grids, 1e-8, 100).unwrap();
    assert!(tt.to_dense().relative_error(&dense).unwrap() <= 1e-8);
    let direct = inv_linear_tt(&grids, 1e-8, DEFAULT_MEMORY_CAP).unwrap();
    assert!(direct.to_dense().relative_error(&dense).unwrap() <= 1e-8);
}
