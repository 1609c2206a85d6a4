use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracsum::bench::{self, Formats, Table};
use fracsum::error::Error;
use fracsum::expsum::{max_strip_width, ExpSum};
use fracsum::problems::RhsKind;
use fracsum::solver::DEFAULT_MEMORY_CAP;

#[derive(Parser, Debug)]
#[command(name = "fracsum", version, about = "Exponential-sum solvers for fractional Kronecker-sum problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Max error of the exponential sum over [1, 1e6] against its bound, per N
    ExpsumConvergence,
    /// |g| on the edge of the analyticity strip against the decay bound
    StripBound,
    /// Relative error of the fractional Poisson solve against diagonalization
    Poisson,
    /// Best low-rank distances against the constructive approximant
    RankDecay,
    /// Tensor-train solve in higher dimension
    TtHighd,
}

#[derive(Args, Debug)]
struct Options {
    /// Fractional power(s), comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    alpha: Vec<f64>,
    /// Accuracy targets instead of a term-count sweep (expsum-convergence)
    #[arg(long, global = true, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Grid points per direction
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Dimension(s), comma separated for tt-highd
    #[arg(long, global = true, value_delimiter = ',')]
    d: Vec<usize>,
    /// Term counts: `K`, `A:B`, `A:B:STEP` or a comma list
    #[arg(long = "N", global = true)]
    terms: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (a directory for expsum-convergence); stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// rank-decay: subset of cp,tucker,tt. poisson: dense, cp, tucker or tt
    #[arg(long, global = true)]
    format: Option<String>,
    #[arg(long = "round-tol", global = true)]
    round_tol: Option<f64>,
    /// Explicit term counts, comma separated (overrides --N)
    #[arg(long = "sum-lengths", global = true, value_delimiter = ',')]
    sum_lengths: Vec<usize>,
    /// Largest number of dense entries any step may materialize
    #[arg(long = "memory-cap", global = true, default_value_t = DEFAULT_MEMORY_CAP)]
    memory_cap: usize,
    /// Right-hand side: inv_linear, separable or random_rank1
    #[arg(long, global = true)]
    rhs: Option<String>,
    /// Strip half-width for strip-bound (default πα/8)
    #[arg(long = "strip-width", global = true)]
    strip_width: Option<f64>,
    /// Right end of the τ range for strip-bound
    #[arg(long = "tau-max", global = true, default_value_t = 10.0)]
    tau_max: f64,
    /// Also write the largest exponential sum the command uses (weight, exponent per line)
    #[arg(long = "dump-expsum", global = true)]
    dump_expsum: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Resource(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MemoryCap { .. } => Self::Resource(e.to_string()),
            Error::InvalidArgument(_)
            | Error::Domain(_)
            | Error::DimensionMismatch(_)
            | Error::ModeOutOfRange { .. }
            | Error::NotSpd(_)
            | Error::Parse(_) => Self::Config(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn config<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Config(msg.into()))
}

fn parse_terms(spec: &str) -> CliResult<Vec<usize>> {
    let num = |s: &str| -> CliResult<usize> {
        s.trim()
            .parse()
            .map_err(|_| Failure::Config(format!("bad term count {s:?}")))
    };
    let out: Vec<usize> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let (a, b, step) = match parts[..] {
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, s] => (num(a)?, num(b)?, num(s)?),
            _ => return config(format!("bad term range {spec:?}")),
        };
        if step == 0 || a > b {
            return config(format!("bad term range {spec:?}"));
        }
        (a..=b).step_by(step).collect()
    } else if spec.contains(',') {
        spec.split(',').map(num).collect::<CliResult<_>>()?
    } else {
        (1..=num(spec)?).collect()
    };
    if out.is_empty() || out.contains(&0) {
        return config("term counts must be positive");
    }
    Ok(out)
}

impl Options {
    fn single_alpha(&self, default: f64) -> CliResult<f64> {
        match self.alpha[..] {
            [] => Ok(default),
            [a] => Ok(a),
            _ => config("this command takes a single --alpha"),
        }
    }

    fn single_d(&self, default: usize) -> CliResult<usize> {
        match self.d[..] {
            [] => Ok(default),
            [d] => Ok(d),
            _ => config("this command takes a single --d"),
        }
    }

    fn term_counts(&self, default: &str) -> CliResult<Vec<usize>> {
        if !self.sum_lengths.is_empty() {
            if self.sum_lengths.contains(&0) {
                return config("term counts must be positive");
            }
            return Ok(self.sum_lengths.clone());
        }
        parse_terms(self.terms.as_deref().unwrap_or(default))
    }

    fn rhs_kind(&self, default: RhsKind) -> CliResult<RhsKind> {
        match &self.rhs {
            None => Ok(default),
            Some(s) => Ok(s.parse()?),
        }
    }
}

fn emit(table: &Table, out: Option<&Path>) -> CliResult<()> {
    let text = table.to_text();
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(e.to_string())),
    }
}

fn dump_expsum(o: &Options, es: CliResult<ExpSum<f64>>) -> CliResult<()> {
    let Some(path) = &o.dump_expsum else {
        return Ok(());
    };
    fs::write(path, es?.to_text()).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn run(cli: &Cli) -> CliResult<()> {
    let o = &cli.opts;
    match cli.command {
        Command::ExpsumConvergence => {
            let alphas = if o.alpha.is_empty() { vec![0.25, 0.5, 0.75] } else { o.alpha.clone() };
            let tables = alphas
                .iter()
                .map(|&a| {
                    if o.eps.is_empty() {
                        let ns = o.term_counts("1:200")?;
                        let (lo, hi) = (ns[0], *ns.last().expect("non-empty"));
                        Ok(bench::expsum_convergence(a, lo, hi)?)
                    } else {
                        Ok(bench::expsum_accuracy(a, &o.eps)?)
                    }
                })
                .collect::<CliResult<Vec<_>>>()?;
            if o.dump_expsum.is_some() {
                let a = alphas[0];
                let es = match o.eps.first() {
                    Some(&e) => ExpSum::new(a, e),
                    None => ExpSum::with_terms(a, *o.term_counts("1:200")?.last().expect("non-empty")),
                };
                dump_expsum(o, es.map_err(Failure::from))?;
            }
            match &o.out {
                Some(dir) => {
                    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
                    for (a, t) in alphas.iter().zip(&tables) {
                        emit(t, Some(&dir.join(format!("example1_{a}.dat"))))?;
                    }
                }
                None => {
                    for (k, t) in tables.iter().enumerate() {
                        if k > 0 {
                            println!("\n");
                        }
                        emit(t, None)?;
                    }
                }
            }
            Ok(())
        }
        Command::StripBound => {
            let alpha = o.single_alpha(0.25)?;
            if !(alpha > 0.0 && alpha < 1.0) {
                return config(format!("alpha must lie in (0, 1), got {alpha}"));
            }
            if o.dump_expsum.is_some() {
                return config("--dump-expsum does not apply to strip-bound");
            }
            let d = o.strip_width.unwrap_or_else(|| max_strip_width(alpha));
            emit(&bench::strip_bound(alpha, d, o.tau_max, 201)?, o.out.as_deref())
        }
        Command::Poisson => {
            let alpha = o.single_alpha(0.4)?;
            let d = o.single_d(3)?;
            let n = o.n.unwrap_or(32);
            let kind = o.rhs_kind(RhsKind::InvLinear)?;
            let ns = o.term_counts("2:60:2")?;
            let largest = *ns.iter().max().expect("non-empty");
            dump_expsum(o, ExpSum::with_terms(alpha, largest).map_err(Failure::from))?;
            let t = match o.format.as_deref() {
                None => bench::poisson(d, n, alpha, kind, o.seed, &ns, o.memory_cap)?,
                Some(f) => {
                    let format = bench::SolveFormat::parse(f)?;
                    let tol = o.round_tol.unwrap_or(0.0);
                    bench::poisson_with_format(d, n, alpha, kind, o.seed, &ns, format, tol, o.memory_cap)?
                }
            };
            emit(&t, o.out.as_deref())
        }
        Command::RankDecay => {
            let alpha = o.single_alpha(0.5)?;
            let n = o.n.unwrap_or(32);
            let formats = match &o.format {
                None => Formats::ALL,
                Some(f) => Formats::parse(f)?,
            };
            let ns = o.term_counts("15")?;
            let n_max = *ns.last().expect("non-empty");
            dump_expsum(o, ExpSum::with_terms(alpha, n_max).map_err(Failure::from))?;
            emit(
                &bench::rank_decay(n, alpha, n_max, formats, o.seed, o.memory_cap)?,
                o.out.as_deref(),
            )
        }
        Command::TtHighd => {
            let alpha = o.single_alpha(0.5)?;
            let ds = if o.d.is_empty() { vec![4] } else { o.d.clone() };
            let n = o.n.unwrap_or(16);
            let n_terms = match (&o.terms, o.sum_lengths.as_slice()) {
                (None, []) => 200,
                (_, [k]) => *k,
                (Some(s), []) => s
                    .trim()
                    .parse()
                    .map_err(|_| Failure::Config(format!("tt-highd takes a single --N, got {s:?}")))?,
                _ => return config("tt-highd takes a single term count"),
            };
            let tol = o.round_tol.unwrap_or(1e-12);
            dump_expsum(o, ExpSum::with_terms(alpha, n_terms).map_err(Failure::from))?;
            let mut t = Table::default();
            for d in ds {
                t.push(bench::tt_highd(d, n, alpha, n_terms, tol, o.memory_cap)?);
            }
            emit(&t, o.out.as_deref())
        }
    }
}

fn init_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("FRACSUM_THREADS") {
        let k: usize = v
            .parse()
            .map_err(|_| Failure::Config(format!("FRACSUM_THREADS must be a positive integer, got {v:?}")))?;
        if k == 0 {
            return config("FRACSUM_THREADS must be a positive integer");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("fracsum: configuration error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Resource(m)) => {
            eprintln!("fracsum: resource limit: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("fracsum: {m}");
            ExitCode::from(1)
        }
    }
}
