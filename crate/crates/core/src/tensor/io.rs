//! Plain-text tensor blocks.
//!
//! A block is a line with the number of modes, a line with the shape, then
//! one value per line in storage order. CP, Tucker and TT tensors are
//! written as consecutive blocks: CP as its factor matrices, Tucker as the
//! core followed by the factors, TT as its carriages (the first and last as
//! two-mode blocks).

use std::io::Write;

use super::{Carriage, CpTensor, DenseTensor, TtTensor, TuckerTensor};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

fn write_block<T: Scalar, W: Write>(w: &mut W, shape: &[usize], values: &[T]) -> Result<()> {
    writeln!(w, "{}", shape.len())?;
    let dims: Vec<String> = shape.iter().map(|n| n.to_string()).collect();
    writeln!(w, "{}", dims.join(" "))?;
    for v in values {
        writeln!(w, "{:.17e}", v.to_f64_lossy())?;
    }
    Ok(())
}

fn write_matrix<T: Scalar, W: Write>(w: &mut W, m: &Matrix<T>) -> Result<()> {
    write_block(w, &[m.rows(), m.cols()], m.as_slice())
}

pub fn write_dense<T: Scalar, W: Write>(w: &mut W, x: &DenseTensor<T>) -> Result<()> {
    write_block(w, x.shape(), x.values())
}

pub fn write_cp<T: Scalar, W: Write>(w: &mut W, x: &CpTensor<T>) -> Result<()> {
    x.factors().iter().try_for_each(|f| write_matrix(w, f))
}

pub fn write_tucker<T: Scalar, W: Write>(w: &mut W, x: &TuckerTensor<T>) -> Result<()> {
    write_dense(w, x.core())?;
    x.factors().iter().try_for_each(|f| write_matrix(w, f))
}

pub fn write_tt<T: Scalar, W: Write>(w: &mut W, x: &TtTensor<T>) -> Result<()> {
    let d = x.ndim();
    for (k, c) in x.cores().iter().enumerate() {
        let (r0, n, r1) = c.dims();
        let shape: Vec<usize> = match (k == 0, k == d - 1) {
            (true, true) => vec![n],
            (true, false) => vec![n, r1],
            (false, true) => vec![r0, n],
            (false, false) => vec![r0, n, r1],
        };
        write_block(w, &shape, c.data())?;
    }
    Ok(())
}

struct Tokens<'a> {
    inner: std::str::SplitWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.split_whitespace(),
        }
    }

    fn usize(&mut self) -> Result<Option<usize>> {
        match self.inner.next() {
            None => Ok(None),
            Some(t) => t
                .parse()
                .map(Some)
                .map_err(|_| Error::Parse(format!("expected an integer, found {t:?}"))),
        }
    }

    fn block<T: Scalar>(&mut self) -> Result<Option<(Vec<usize>, Vec<T>)>> {
        let Some(d) = self.usize()? else {
            return Ok(None);
        };
        let shape = (0..d)
            .map(|_| self.usize()?.ok_or_else(|| Error::Parse("truncated shape line".into())))
            .collect::<Result<Vec<_>>>()?;
        let len: usize = shape.iter().product();
        let values = (0..len)
            .map(|_| {
                let t = self
                    .inner
                    .next()
                    .ok_or_else(|| Error::Parse(format!("expected {len} values")))?;
                t.parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::Parse(format!("bad value {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Some((shape, values)))
    }

    fn blocks<T: Scalar>(&mut self) -> Result<Vec<(Vec<usize>, Vec<T>)>> {
        let mut out = Vec::new();
        while let Some(b) = self.block()? {
            out.push(b);
        }
        Ok(out)
    }
}

fn block_matrix<T: Scalar>((shape, values): (Vec<usize>, Vec<T>)) -> Result<Matrix<T>> {
    match shape[..] {
        [r, c] => Matrix::from_col_major(r, c, values),
        _ => Err(Error::Parse(format!("expected a two-mode block, found shape {shape:?}"))),
    }
}

pub fn parse_dense<T: Scalar>(text: &str) -> Result<DenseTensor<T>> {
    let mut tokens = Tokens::new(text);
    let (shape, values) = tokens.block()?.ok_or_else(|| Error::Parse("empty input".into()))?;
    if tokens.inner.next().is_some() {
        return Err(Error::Parse("trailing data after dense block".into()));
    }
    DenseTensor::new(shape, values)
}

pub fn parse_cp<T: Scalar>(text: &str) -> Result<CpTensor<T>> {
    let blocks = Tokens::new(text).blocks()?;
    CpTensor::new(blocks.into_iter().map(block_matrix).collect::<Result<_>>()?)
}

pub fn parse_tucker<T: Scalar>(text: &str) -> Result<TuckerTensor<T>> {
    let mut blocks = Tokens::new(text).blocks()?.into_iter();
    let (shape, values) = blocks.next().ok_or_else(|| Error::Parse("empty input".into()))?;
    let core = DenseTensor::new(shape, values)?;
    TuckerTensor::new(core, blocks.map(block_matrix).collect::<Result<_>>()?)
}

pub fn parse_tt<T: Scalar>(text: &str) -> Result<TtTensor<T>> {
    let blocks: Vec<(Vec<usize>, Vec<T>)> = Tokens::new(text).blocks()?;
    let d = blocks.len();
    let cores = blocks
        .into_iter()
        .enumerate()
        .map(|(k, (shape, values))| {
            let (r0, n, r1) = match (k == 0, k + 1 == d, &shape[..]) {
                (true, true, &[n]) => (1, n, 1),
                (true, false, &[n, r1]) => (1, n, r1),
                (false, true, &[r0, n]) => (r0, n, 1),
                (false, false, &[r0, n, r1]) => (r0, n, r1),
                _ => return Err(Error::Parse(format!("unexpected carriage shape {shape:?} at position {k}"))),
            };
            Carriage::new(r0, n, r1, values)
        })
        .collect::<Result<_>>()?;
    TtTensor::new(cores)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn dense_layout() {
        let x = DenseTensor::new(vec![2, 1, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = text(|w| write_dense(w, &x));
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "3");
        assert_eq!(lines[1], "2 1 2");
        assert_eq!(lines.len(), 6);
        assert_eq!(parse_dense::<f64>(&s).unwrap(), x);
    }

    #[test]
    fn tt_round_trip() {
        let tt = TtTensor::from_cp(
            &CpTensor::new(vec![
                Matrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64),
                Matrix::from_fn(2, 2, |i, j| 1.0 / (1 + i + j) as f64),
                Matrix::from_fn(4, 2, |i, j| (i as f64) - (j as f64)),
            ])
            .unwrap(),
        )
        .unwrap();
        let s = text(|w| write_tt(w, &tt));
        assert!(s.starts_with("2\n3 2\n"));
        assert_eq!(parse_tt::<f64>(&s).unwrap(), tt);
        let one = TtTensor::rank_one(&[&[1.0, 2.0]]).unwrap();
        assert_eq!(parse_tt::<f64>(&text(|w| write_tt(w, &one))).unwrap(), one);
    }

    #[test]
    fn cp_and_tucker_round_trip() {
        let cp = CpTensor::new(vec![Matrix::from_fn(2, 3, |i, j| (i * j) as f64 + 0.5); 3]).unwrap();
        assert_eq!(parse_cp::<f64>(&text(|w| write_cp(w, &cp))).unwrap(), cp);
        let core = DenseTensor::new(vec![1, 2], vec![3.0, -1.0]).unwrap();
        let tk = TuckerTensor::new(core, vec![Matrix::from_fn(2, 1, |i, _| i as f64), Matrix::identity(2)]).unwrap();
        assert_eq!(parse_tucker::<f64>(&text(|w| write_tucker(w, &tk))).unwrap(), tk);
    }

    #[test]
    fn malformed_input() {
        assert!(matches!(parse_dense::<f64>("2\n2 2\n1\n2\n3\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_dense::<f64>("1\n2\n1\nx\n"), Err(Error::Parse(_))));
        assert!(parse_dense::<f64>("").is_err());
        assert!(parse_tt::<f64>("3\n1 2 1\n1\n2\n").is_err());
    }
}
