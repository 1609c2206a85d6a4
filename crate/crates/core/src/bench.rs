//! Experiment drivers. Each returns a [`Table`] of numeric rows that the
//! command-line front end writes as headerless whitespace-separated columns.

use std::io::Write;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::expsum::{integrand, max_strip_width, right_decay_bound, ExpSum};
use crate::problems::{inv_linear_tt, laplacian_1d, sample_rhs, Grid1D, Rhs, RhsKind, RhsSpec, RHS_TT_TOL};
use crate::solver::{oracle_apply, solve_cp, solve_dense, solve_tt, solve_tucker, KroneckerSum};
use crate::tensor::{cp_als, hosvd, CpAlsOptions, DenseTensor, HosvdTarget, TtTensor};
use num_complex::Complex;

/// Rows of numbers; `NaN` marks a cell that was not computed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn push(&mut self, row: Vec<f64>) {
        self.rows.push(row);
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[k]).collect()
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_cell(v)).collect();
            writeln!(w, "{}", cells.join(" "))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }
}

fn format_cell(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.10e}")
    }
}

/// `n` points logarithmically spaced on `[lo, hi]`, endpoints included.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

pub const CONVERGENCE_SAMPLES: usize = 100;
pub const CONVERGENCE_XI_MAX: f64 = 1e6;

/// Largest `|E(ξ) − ξ^{-α}|` over the sample points.
pub fn max_expsum_error(es: &ExpSum<f64>, xs: &[f64]) -> f64 {
    let alpha = es.params().alpha();
    xs.iter().map(|&x| (es.evaluate(x) - x.powf(-alpha)).abs()).fold(0.0, f64::max)
}

/// Rows `N, max error, certified bound` for `N = n_min..=n_max`.
pub fn expsum_convergence(alpha: f64, n_min: usize, n_max: usize) -> Result<Table> {
    if n_min == 0 || n_max < n_min {
        return Err(Error::InvalidArgument(format!("bad term range {n_min}..={n_max}")));
    }
    let xs = log_space(1.0, CONVERGENCE_XI_MAX, CONVERGENCE_SAMPLES);
    let mut t = Table::default();
    for n in n_min..=n_max {
        let es = ExpSum::with_terms(alpha, n)?;
        t.push(vec![n as f64, max_expsum_error(&es, &xs), es.error_bound()]);
    }
    Ok(t)
}

/// Rows `N, max error, certified bound` for each accuracy target.
pub fn expsum_accuracy(alpha: f64, eps: &[f64]) -> Result<Table> {
    let xs = log_space(1.0, CONVERGENCE_XI_MAX, CONVERGENCE_SAMPLES);
    let mut t = Table::default();
    for &e in eps {
        let es = ExpSum::new(alpha, e)?;
        t.push(vec![es.len() as f64, max_expsum_error(&es, &xs), es.error_bound()]);
    }
    Ok(t)
}

/// Least-squares slope of `log(error)` against `√N` over rows whose error
/// exceeds `floor`.
pub fn rate_fit(table: &Table, floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r[1] > floor)
        .map(|r| (r[0].sqrt(), r[1].ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// The predicted slope `−√(2πd)` with `d = πα/8`.
pub fn predicted_rate(alpha: f64) -> f64 {
    -(2.0 * std::f64::consts::PI * max_strip_width(alpha)).sqrt()
}

/// `e^{−√(2πdN)}` with `d = πα/8`.
pub fn rate_curve(alpha: f64, n_terms: usize) -> f64 {
    (predicted_rate(alpha) * (n_terms as f64).sqrt()).exp()
}

/// Rows `γ, |g(γ + i·d)|, right-half-line bound` on `[0, tau_max]` at `ξ = 1`.
pub fn strip_bound(alpha: f64, d: f64, tau_max: f64, samples: usize) -> Result<Table> {
    let limit = std::f64::consts::PI * alpha / 4.0;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(d > 0.0 && d < limit) {
        return Err(Error::InvalidArgument(format!("strip width must lie in (0, πα/4 = {limit}), got {d}")));
    }
    if !(tau_max > 0.0) || samples < 2 {
        return Err(Error::InvalidArgument("need tau_max > 0 and at least two samples".into()));
    }
    let mut t = Table::default();
    for k in 0..samples {
        let gamma = tau_max * k as f64 / (samples - 1) as f64;
        let g = integrand(Complex::new(gamma, d), 1.0, alpha)?.norm();
        t.push(vec![gamma, g, right_decay_bound(gamma, d, 1.0, alpha)]);
    }
    Ok(t)
}

/// Shared setup: Laplacian Kronecker sum on an `n^d` grid.
pub fn laplacian_problem(d: usize, n: usize, cap: usize) -> Result<(KroneckerSum<f64>, Vec<Grid1D<f64>>)> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let ks = KroneckerSum::uniform(laplacian_1d(n)?, d)?.with_memory_cap(cap);
    Ok((ks, vec![Grid1D::new(n)?; d]))
}

/// Solver used by [`poisson_with_format`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveFormat {
    Dense,
    Cp,
    Tucker,
    Tt,
}

impl SolveFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Self::Dense),
            "cp" => Ok(Self::Cp),
            "tucker" => Ok(Self::Tucker),
            "tt" => Ok(Self::Tt),
            _ => Err(Error::Parse(format!("unknown format {s:?} (expected dense, cp, tucker or tt)"))),
        }
    }
}

/// Rows `N, relative error vs the diagonalization oracle, e^{−√(2πdN)}`.
///
/// CP right-hand sides use the CP solver, everything else the dense one.
pub fn poisson(d: usize, n: usize, alpha: f64, kind: RhsKind, seed: u64, sum_lengths: &[usize], cap: usize) -> Result<Table> {
    let format = if kind == RhsKind::InvLinear { SolveFormat::Dense } else { SolveFormat::Cp };
    poisson_with_format(d, n, alpha, kind, seed, sum_lengths, format, 0.0, cap)
}

/// [`poisson`] with an explicit solver format.
///
/// Tucker and TT convert the right-hand side first (HOSVD at `1e-12`, TT-SVD
/// at the sampling tolerance); the reference is the oracle applied to the
/// converted right-hand side. `round_tol` is passed to the Tucker and TT
/// solvers.
#[allow(clippy::too_many_arguments)]
pub fn poisson_with_format(
    d: usize,
    n: usize,
    alpha: f64,
    kind: RhsKind,
    seed: u64,
    sum_lengths: &[usize],
    format: SolveFormat,
    round_tol: f64,
    cap: usize,
) -> Result<Table> {
    let (ks, grids) = laplacian_problem(d, n, cap)?;
    let spec = RhsSpec::new(kind, d, seed)?;
    let rhs = sample_rhs(&spec, &grids, cap)?;
    let tucker_rhs = match format {
        SolveFormat::Tucker => Some(hosvd(&rhs.to_dense(cap)?, &HosvdTarget::Tolerance(1e-12))?.tucker),
        _ => None,
    };
    let tt_rhs = match format {
        SolveFormat::Tt => Some(rhs.to_tt()?),
        _ => None,
    };
    let c = match (&tucker_rhs, &tt_rhs) {
        (Some(t), _) => t.to_dense(),
        (_, Some(t)) => t.to_dense(),
        _ => rhs.to_dense(cap)?,
    };
    let cp_rhs = match (&rhs, format) {
        (Rhs::Cp(cp), SolveFormat::Cp) => Some(cp),
        (_, SolveFormat::Cp) => {
            return Err(Error::InvalidArgument(format!("the CP solver needs a separable right-hand side, not {kind}")))
        }
        _ => None,
    };
    let exact = oracle_apply(&ks, &c, alpha)?;
    let exact_norm = exact.frobenius_norm();
    let mut t = Table::default();
    for &n_terms in sum_lengths {
        let es = ExpSum::with_terms(alpha, n_terms)?;
        let x = match format {
            SolveFormat::Dense => solve_dense(&ks, &c, &es)?.0,
            SolveFormat::Cp => solve_cp(&ks, cp_rhs.expect("checked above"), &es)?.0.to_dense(),
            SolveFormat::Tucker => solve_tucker(&ks, tucker_rhs.as_ref().expect("built above"), &es, round_tol)?.0.to_dense(),
            SolveFormat::Tt => solve_tt(&ks, tt_rhs.as_ref().expect("built above"), &es, round_tol)?.0.to_dense(),
        };
        let err = x.sub(&exact)?.frobenius_norm() / exact_norm;
        t.push(vec![n_terms as f64, err, rate_curve(alpha, n_terms)]);
    }
    Ok(t)
}

/// Which low-rank formats [`rank_decay`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub cp: bool,
    pub tucker: bool,
    pub tt: bool,
}

impl Formats {
    pub const ALL: Self = Self {
        cp: true,
        tucker: true,
        tt: true,
    };

    /// Parses a comma-separated subset of `cp`, `tucker`, `tt` (or `all`).
    pub fn parse(s: &str) -> Result<Self> {
        let mut f = Self {
            cp: false,
            tucker: false,
            tt: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "all" => f = Self::ALL,
                "cp" => f.cp = true,
                "tucker" => f.tucker = true,
                "tt" => f.tt = true,
                _ => return Err(Error::Parse(format!("unknown format {part:?} (expected cp, tucker, tt or all)"))),
            }
        }
        if !(f.cp || f.tucker || f.tt) {
            return Err(Error::Parse("no format selected".into()));
        }
        Ok(f)
    }
}

/// Rows `N, CP distance, e^{−√(2πdN)}, Tucker distance, TT distance,
/// constructive error, constructive certified bound`, all relative to `‖X‖`.
///
/// The constructive approximant is the `N`-term exponential-sum solution; CP
/// fits are warm-started from it in addition to random restarts.
pub fn rank_decay(n: usize, alpha: f64, n_max: usize, formats: Formats, seed: u64, cap: usize) -> Result<Table> {
    let d = 3;
    let (ks, grids) = laplacian_problem(d, n, cap)?;
    let spec = RhsSpec::new(RhsKind::RandomRank1, d, seed)?;
    let Rhs::Cp(c) = sample_rhs(&spec, &grids, cap)? else {
        unreachable!("random rank-one right-hand sides are CP");
    };
    let exact = oracle_apply(&ks, &c.to_dense(), alpha)?;
    let xn = exact.frobenius_norm();
    let rel = |y: &DenseTensor<f64>| -> f64 { y.sub(&exact).expect("same shape").frobenius_norm() / xn };
    let opts = CpAlsOptions { seed, ..Default::default() };
    let mut t = Table::default();
    for n_terms in 1..=n_max {
        let es = ExpSum::with_terms(alpha, n_terms)?;
        let (xcp, rep) = solve_cp(&ks, &c, &es)?;
        let constructive = rel(&xcp.to_dense());
        let certified = rep.error_bound / xn;
        let cp_dist = if formats.cp {
            cp_als(&exact, n_terms, &opts, &[xcp])?.rel_error()
        } else {
            f64::NAN
        };
        let r = n_terms.min(n);
        let tucker_dist = if formats.tucker {
            rel(&hosvd(&exact, &HosvdTarget::Ranks(vec![r; d]))?.tucker.to_dense())
        } else {
            f64::NAN
        };
        let tt_dist = if formats.tt {
            rel(&TtTensor::from_dense_capped(&exact, 0.0, n_terms)?.to_dense())
        } else {
            f64::NAN
        };
        t.push(vec![
            n_terms as f64,
            cp_dist,
            rate_curve(alpha, n_terms),
            tucker_dist,
            tt_dist,
            constructive,
            certified,
        ]);
    }
    Ok(t)
}

/// Largest `d` for which [`tt_highd`] compares against the dense oracle.
pub const TT_ORACLE_MAX_D: usize = 4;

/// One row `d, wall time, relative error, max TT rank, certified bound`.
///
/// The error is `NaN` above [`TT_ORACLE_MAX_D`] modes or when the dense
/// oracle would exceed `cap`.
pub fn tt_highd(d: usize, n: usize, alpha: f64, n_terms: usize, round_tol: f64, cap: usize) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("the TT experiment needs d ≥ 2, got {d}")));
    }
    let (ks, grids) = laplacian_problem(d, n, cap)?;
    let es = ExpSum::with_terms(alpha, n_terms)?;
    let start = Instant::now();
    let c = inv_linear_tt(&grids, RHS_TT_TOL, cap)?;
    let (x, rep) = solve_tt(&ks, &c, &es, round_tol)?;
    let wall = start.elapsed().as_secs_f64();
    let entries: usize = grids.iter().map(|g| g.n()).product::<usize>();
    let err = if d <= TT_ORACLE_MAX_D && entries <= cap {
        let dense_rhs = c.to_dense();
        let exact = oracle_apply(&ks, &dense_rhs, alpha)?;
        x.to_dense().relative_error(&exact)?
    } else {
        f64::NAN
    };
    let rel_bound = rep.error_bound / c.frobenius_norm().max(f64::MIN_POSITIVE);
    Ok(vec![d as f64, wall, err, x.max_rank() as f64, rel_bound])
}
