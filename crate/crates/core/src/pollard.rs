//! Numeric matrices with few distinct values.
//!
//! `M = c·J + Σ_k w_k·B_k`, where `c` is the minimum entry, `τ_1 < … < τ_A`
//! are the distinct positive values of `M − c`, `w_k = τ_k − τ_{k−1}` and
//! `B_k = 1{M − c ≥ τ_k}`. Each level set gets its own static engine.

use std::io::{BufRead, Write};

use crate::bitmatrix::io::parse_header;
use crate::bitmatrix::BitMatrix;
use crate::engine::{QueryStats, StaticOmv};
use crate::error::{check_len, OmvError, Result};
use crate::scalar::Scalar;

pub const DEFAULT_VALUE_CAP: usize = 64;

/// Dense row-major numeric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> NumericMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        check_len(rows * cols, data.len())?;
        Ok(NumericMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let data = (0..rows * cols)
            .map(|k| f(k / cols.max(1), k % cols.max(1)))
            .collect();
        NumericMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn naive_mv(&self, v: &[T]) -> Result<Vec<T>> {
        check_len(self.cols, v.len())?;
        Ok((0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &x)| acc + a * x)
            })
            .collect())
    }
}

impl<T: Scalar + std::str::FromStr> NumericMatrix<T> {
    /// `%%OMV numeric <m> <n>` followed by `m` lines of `n` numbers.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let Some((lineno, header)) = lines.next() else {
            return Err(OmvError::parse(1, "empty input"));
        };
        let dims = parse_header(&header?, lineno, "numeric")?;
        let &[rows, cols] = dims.as_slice() else {
            return Err(OmvError::parse(lineno, "header needs exactly <m> <n>"));
        };
        let mut data = Vec::with_capacity(rows * cols);
        let mut last = lineno;
        for i in 0..rows {
            let Some((lineno, line)) = lines.next() else {
                return Err(OmvError::parse(
                    last + 1,
                    format!("expected {rows} rows, found {i}"),
                ));
            };
            last = lineno;
            let line = line?;
            let before = data.len();
            for t in line.split_whitespace() {
                data.push(
                    t.parse::<T>()
                        .map_err(|_| OmvError::parse(lineno, format!("bad number `{t}`")))?,
                );
            }
            if data.len() - before != cols {
                return Err(OmvError::parse(
                    lineno,
                    format!("expected {cols} values, found {}", data.len() - before),
                ));
            }
        }
        if let Some((lineno, _)) = lines.next() {
            return Err(OmvError::parse(lineno, "trailing data after last row"));
        }
        Ok(NumericMatrix { rows, cols, data })
    }
}

impl<T: Scalar + std::fmt::Display> NumericMatrix<T> {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%OMV numeric {} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ThresholdDecomp<T> {
    rows: usize,
    cols: usize,
    base: T,
    thresholds: Vec<T>,
    weights: Vec<T>,
    engines: Vec<StaticOmv>,
}

impl<T: Scalar> ThresholdDecomp<T> {
    pub fn decompose(m: &NumericMatrix<T>) -> Result<Self> {
        Self::decompose_with_cap(m, DEFAULT_VALUE_CAP)
    }

    /// Fails with [`OmvError::TooManyValues`] if `m` has more than `cap`
    /// distinct values, or with `InvalidInput` on incomparable entries.
    pub fn decompose_with_cap(m: &NumericMatrix<T>, cap: usize) -> Result<Self> {
        if m.data.iter().any(|x| x.partial_cmp(x).is_none()) {
            return Err(OmvError::InvalidInput("matrix contains NaN".into()));
        }
        let mut distinct = m.data.clone();
        distinct.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
        distinct.dedup();
        if distinct.len() > cap {
            return Err(OmvError::TooManyValues {
                count: distinct.len(),
                cap,
            });
        }
        let base = distinct.first().copied().unwrap_or_else(T::zero);
        let thresholds: Vec<T> = distinct.iter().skip(1).map(|&x| x - base).collect();
        let mut prev = T::zero();
        let weights = thresholds
            .iter()
            .map(|&t| {
                let w = t - prev;
                prev = t;
                w
            })
            .collect();
        // Level k is taken from the sorted distinct values so that the
        // comparison is exact even for non-integral entries.
        let engines = distinct
            .iter()
            .skip(1)
            .map(|&level| {
                StaticOmv::preprocess(BitMatrix::from_fn(m.rows, m.cols, |i, j| {
                    m.get(i, j) >= level
                }))
            })
            .collect();
        Ok(ThresholdDecomp {
            rows: m.rows,
            cols: m.cols,
            base,
            thresholds,
            weights,
            engines,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn base_offset(&self) -> T {
        self.base
    }

    pub fn thresholds(&self) -> &[T] {
        &self.thresholds
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn levels(&self) -> usize {
        self.engines.len()
    }

    pub fn level_matrix(&self, k: usize) -> &BitMatrix {
        self.engines[k].matrix()
    }

    /// Entry rebuilt from the decomposition.
    pub fn reconstruct(&self, i: usize, j: usize) -> T {
        self.engines
            .iter()
            .zip(&self.weights)
            .filter(|(e, _)| e.matrix().get(i, j))
            .fold(self.base, |acc, (_, &w)| acc + w)
    }

    pub fn mv(&self, v: &[T]) -> Result<Vec<T>> {
        self.mv_with_stats(v).map(|(out, _)| out)
    }

    pub fn mv_with_stats(&self, v: &[T]) -> Result<(Vec<T>, QueryStats)> {
        check_len(self.cols, v.len())?;
        let total = v.iter().fold(T::zero(), |acc, &x| acc + x);
        let mut out = vec![self.base * total; self.rows];
        let mut stats = QueryStats::default();
        for (engine, &w) in self.engines.iter().zip(&self.weights) {
            let (part, st) = engine.mv(v)?;
            stats += st;
            for (o, p) in out.iter_mut().zip(part) {
                *o += w * p;
            }
        }
        Ok((out, stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_from(
        rng: &mut impl Rng,
        rows: usize,
        cols: usize,
        values: &[i64],
    ) -> NumericMatrix<i64> {
        NumericMatrix::from_fn(rows, cols, |_, _| values[rng.random_range(0..values.len())])
    }

    #[test]
    fn boolean_matrix() {
        let m = NumericMatrix::from_fn(3, 3, |i, j| ((i + j) % 2) as i64);
        let d = ThresholdDecomp::decompose(&m).unwrap();
        assert_eq!(d.base_offset(), 0);
        assert_eq!(d.levels(), 1);
        assert_eq!(d.weights(), &[1]);
        assert_eq!(
            *d.level_matrix(0),
            BitMatrix::from_fn(3, 3, |i, j| (i + j) % 2 == 1)
        );
    }

    #[test]
    fn constant_matrix() {
        let m = NumericMatrix::from_fn(3, 2, |_, _| 7i64);
        let d = ThresholdDecomp::decompose(&m).unwrap();
        assert_eq!(d.base_offset(), 7);
        assert_eq!(d.levels(), 0);
        assert_eq!(d.mv(&[1, 1]).unwrap(), vec![14, 14, 14]);
        assert_eq!(d.mv(&[0, 0]).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn three_values_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_from(&mut rng, 10, 12, &[0, 2, 5]);
        let d = ThresholdDecomp::decompose(&m).unwrap();
        for i in 0..10 {
            for j in 0..12 {
                assert_eq!(d.reconstruct(i, j), m.get(i, j));
            }
        }
    }

    #[test]
    fn mv_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let m = random_from(&mut rng, 8, 8, &[0, 1, 3]);
            let d = ThresholdDecomp::decompose(&m).unwrap();
            let v: Vec<i64> = (0..8).map(|_| rng.random_range(-9..=9)).collect();
            assert_eq!(d.mv(&v).unwrap(), m.naive_mv(&v).unwrap());
        }
    }

    #[test]
    fn negative_and_real_values() {
        let m = NumericMatrix::<f64>::new(2, 3, vec![-1.5, 0.25, 2.0, 0.25, -1.5, -1.5]).unwrap();
        let d = ThresholdDecomp::decompose(&m).unwrap();
        assert_eq!(d.base_offset(), -1.5);
        assert_eq!(d.thresholds(), &[1.75, 3.5]);
        let v = [0.5, -2.0, 3.0];
        let expect = m.naive_mv(&v).unwrap();
        for (a, b) in d.mv(&v).unwrap().iter().zip(expect) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn cap_and_nan() {
        let m = NumericMatrix::from_fn(1, 5, |_, j| j as i64);
        assert!(matches!(
            ThresholdDecomp::decompose_with_cap(&m, 4),
            Err(OmvError::TooManyValues { count: 5, cap: 4 })
        ));
        let m = NumericMatrix::new(1, 1, vec![f64::NAN]).unwrap();
        assert!(ThresholdDecomp::decompose(&m).is_err());
    }

    #[test]
    fn file_round_trip() {
        let m = NumericMatrix::new(2, 2, vec![1i64, -3, 0, 4]).unwrap();
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "%%OMV numeric 2 2\n1 -3\n0 4\n"
        );
        assert_eq!(NumericMatrix::<i64>::read(buf.as_slice()).unwrap(), m);
        assert!(matches!(
            NumericMatrix::<i64>::read("%%OMV numeric 1 2\n1\n".as_bytes()),
            Err(OmvError::Parse { line: 2, .. })
        ));
    }
}
