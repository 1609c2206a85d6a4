use std::path::Path;
use std::process::{Command, Output};

fn fracsum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracsum"))
        .args(args)
        .env_remove("FRACSUM_THREADS")
        .output()
        .expect("binary runs")
}

fn fracsum_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracsum"))
        .args(args)
        .env("FRACSUM_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(|v| v.parse().expect("numeric column")).collect())
        .collect()
}

fn read_rows(path: &Path) -> Vec<Vec<f64>> {
    rows(&std::fs::read_to_string(path).unwrap())
}

#[test]
fn expsum_convergence_is_headerless_and_certified() {
    let text = stdout(&fracsum(&["expsum-convergence", "--alpha", "0.5", "--N", "1:30"]));
    let r = rows(&text);
    assert_eq!(r.len(), 30);
    for row in &r {
        assert!(row.len() >= 3);
        assert!(row[1] <= row[2], "{row:?}");
    }
}

#[test]
fn expsum_convergence_writes_one_file_per_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data");
    stdout(&fracsum(&[
        "expsum-convergence",
        "--alpha",
        "0.25,0.75",
        "--N",
        "1:10",
        "--out",
        out.to_str().unwrap(),
    ]));
    for a in ["0.25", "0.75"] {
        assert_eq!(read_rows(&out.join(format!("example1_{a}.dat"))).len(), 10);
    }
}

#[test]
fn output_is_deterministic() {
    let args = ["poisson", "--n", "8", "--N", "2:10:4", "--rhs", "random_rank1", "--seed", "7"];
    let a = fracsum(&args);
    let b = fracsum(&args);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(rows(&stdout(&a)).len(), 3);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    for format in ["dense", "cp", "tucker", "tt"] {
        let args = ["poisson", "--n", "6", "--N", "4,17", "--rhs", "separable", "--format", format];
        assert_eq!(stdout(&fracsum_threads(&args, "1")), stdout(&fracsum_threads(&args, "3")), "{format}");
    }
    assert_eq!(fracsum_threads(&["strip-bound"], "0").status.code(), Some(2));
}

#[test]
fn configuration_errors_exit_two() {
    for args in [
        &["poisson", "--rhs", "nope"][..],
        &["strip-bound", "--alpha", "1.5"],
        &["strip-bound", "--dump-expsum", "x.txt"],
        &["expsum-convergence", "--N", "5:1"],
        &["poisson", "--alpha", "0.3,0.4"],
    ] {
        let out = fracsum(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn memory_cap_exits_three() {
    let out = fracsum(&["poisson", "--n", "8", "--N", "4", "--memory-cap", "10"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn strip_bound_stays_below_envelope() {
    let r = rows(&stdout(&fracsum(&["strip-bound", "--alpha", "0.5", "--tau-max", "4"])));
    assert_eq!(r.len(), 201);
    for row in &r {
        assert!(row[1] <= row[2] * (1.0 + 1e-12), "{row:?}");
    }
}

#[test]
fn tt_highd_reports_nan_without_reference() {
    let text = stdout(&fracsum(&["tt-highd", "--d", "3,6", "--n", "4", "--N", "12"]));
    let r = rows(&text);
    assert_eq!(r.len(), 2);
    assert!(r[0].iter().all(|v| v.is_finite()));
    assert!(r[1].iter().any(|v| v.is_nan()));
}

#[test]
fn dump_expsum_writes_the_sum() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sum.txt");
    stdout(&fracsum(&[
        "rank-decay",
        "--n",
        "6",
        "--N",
        "4",
        "--format",
        "tt,tucker",
        "--dump-expsum",
        path.to_str().unwrap(),
    ]));
    let (w, t) = fracsum::expsum::parse_terms::<f64>(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let es = fracsum::ExpSum64::with_terms(0.5, 4).unwrap();
    assert_eq!(w, es.weights());
    assert_eq!(t, es.exponents());
}

#[test]
fn rank_decay_low_rank_formats_beat_cp_past_one_term() {
    let text = stdout(&fracsum(&["rank-decay", "--n", "8", "--N", "5"]));
    let r = rows(&text);
    assert_eq!(r.len(), 5);
    for row in r.iter().skip(1) {
        let (cp, tucker, tt) = (row[1], row[3], row[4]);
        assert!(tucker <= cp * (1.0 + 1e-9) && tt <= cp * (1.0 + 1e-9), "{row:?}");
    }
}
