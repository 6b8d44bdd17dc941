//! Bit-packed Boolean matrices and sparse column differences.
//!
//! Rows are packed into `u64` words, each row padded to a word boundary. A
//! column-packed mirror (the row-packed storage of the transpose) is built
//! lazily on first use so that column Hamming distances run word-parallel.

pub(crate) mod io;

use std::fmt;
use std::sync::OnceLock;

use crate::error::{check_len, OmvError, Result};
use crate::scalar::Scalar;

pub use io::{read_matrix, read_vector, write_matrix, write_vector, MatrixFormat};

const WORD_BITS: usize = 64;

#[inline]
pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

#[inline]
fn bit_of(words: &[u64], i: usize) -> bool {
    (words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
}

/// Hamming distance between two equally sized packed bit vectors.
#[inline]
pub fn hamming_words(a: &[u64], b: &[u64]) -> usize {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum()
}

/// Iterator over the positions of set bits in a packed vector.
pub fn iter_ones(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(w, &word)| {
        let mut rest = word;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let tz = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(w * WORD_BITS + tz)
        })
    })
}

/// Re-packs `src` (`src_rows` rows of `src_cols` bits each) as its transpose.
fn transpose_words(src: &[u64], src_rows: usize, src_cols: usize) -> Vec<u64> {
    let src_wpr = words_for(src_cols);
    let dst_wpr = words_for(src_rows);
    let mut dst = vec![0u64; src_cols * dst_wpr];
    for r in 0..src_rows {
        let row = &src[r * src_wpr..(r + 1) * src_wpr];
        let (word, bit) = (r / WORD_BITS, 1u64 << (r % WORD_BITS));
        for c in iter_ones(row) {
            dst[c * dst_wpr + word] |= bit;
        }
    }
    dst
}

/// A bit-packed `rows x cols` Boolean matrix.
#[derive(Clone)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
    col_mirror: OnceLock<Vec<u64>>,
}

impl BitMatrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = words_for(cols);
        BitMatrix {
            rows,
            cols,
            words_per_row,
            data: vec![0; rows * words_per_row],
            col_mirror: OnceLock::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| i == j)
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| true)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    m.data[i * m.words_per_row + j / WORD_BITS] |= 1 << (j % WORD_BITS);
                }
            }
        }
        m
    }

    /// Builds a matrix from the coordinates of its one-entries. Duplicates are
    /// allowed and collapse to a single one.
    pub fn from_coords(rows: usize, cols: usize, ones: &[(usize, usize)]) -> Result<Self> {
        let mut m = Self::zeros(rows, cols);
        for &(row, col) in ones {
            if row >= rows || col >= cols {
                return Err(OmvError::CoordOutOfRange {
                    row,
                    col,
                    rows,
                    cols,
                });
            }
            m.data[row * m.words_per_row + col / WORD_BITS] |= 1 << (col % WORD_BITS);
        }
        Ok(m)
    }

    /// Builds a matrix from packed row words. Each row slice must hold
    /// exactly `words_for(cols)` words; padding bits are cleared.
    pub fn from_row_words<'a>(
        cols: usize,
        rows: impl IntoIterator<Item = &'a [u64]>,
    ) -> Result<Self> {
        let wpr = words_for(cols);
        let mut data = Vec::new();
        let mut count = 0;
        for row in rows {
            check_len(wpr, row.len())?;
            data.extend_from_slice(row);
            count += 1;
        }
        let mut m = BitMatrix {
            rows: count,
            cols,
            words_per_row: wpr,
            data,
            col_mirror: OnceLock::new(),
        };
        m.clear_padding();
        Ok(m)
    }

    /// Builds a `rows x k` matrix from `k` packed columns of `rows` bits each.
    pub fn from_column_words<'a>(
        rows: usize,
        columns: impl IntoIterator<Item = &'a [u64]>,
    ) -> Result<Self> {
        // Column-packed storage of M is the row-packed storage of M^T.
        let t = Self::from_row_words(rows, columns)?;
        Ok(t.transpose())
    }

    fn clear_padding(&mut self) {
        let rem = self.cols % WORD_BITS;
        if rem == 0 || self.words_per_row == 0 {
            return;
        }
        let mask = (1u64 << rem) - 1;
        for r in 0..self.rows {
            self.data[r * self.words_per_row + self.words_per_row - 1] &= mask;
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Words per packed column in the column mirror.
    #[inline]
    pub fn words_per_col(&self) -> usize {
        words_for(self.rows)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(
            row < self.rows && col < self.cols,
            "({row}, {col}) out of bounds"
        );
        bit_of(self.row_words(row), col)
    }

    /// Sets one entry. Invalidates the column mirror.
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        assert!(
            row < self.rows && col < self.cols,
            "({row}, {col}) out of bounds"
        );
        let idx = row * self.words_per_row + col / WORD_BITS;
        let mask = 1u64 << (col % WORD_BITS);
        if value {
            self.data[idx] |= mask;
        } else {
            self.data[idx] &= !mask;
        }
        self.col_mirror.take();
    }

    pub fn flip(&mut self, row: usize, col: usize) {
        let v = self.get(row, col);
        self.set(row, col, !v);
    }

    #[inline]
    pub fn row_words(&self, row: usize) -> &[u64] {
        let start = row * self.words_per_row;
        &self.data[start..start + self.words_per_row]
    }

    fn mirror(&self) -> &[u64] {
        self.col_mirror
            .get_or_init(|| transpose_words(&self.data, self.rows, self.cols))
    }

    /// Packed bits of column `col`, `words_per_col()` words long.
    #[inline]
    pub fn col_words(&self, col: usize) -> &[u64] {
        let wpc = self.words_per_col();
        &self.mirror()[col * wpc..(col + 1) * wpc]
    }

    pub fn row_ones(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        iter_ones(self.row_words(row))
    }

    pub fn col_ones(&self, col: usize) -> impl Iterator<Item = usize> + '_ {
        iter_ones(self.col_words(col))
    }

    /// Number of ones in column `col`.
    pub fn col_weight(&self, col: usize) -> usize {
        self.col_words(col)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Coordinates of all one-entries in row-major order.
    pub fn coords(&self) -> Vec<(usize, usize)> {
        (0..self.rows)
            .flat_map(|i| self.row_ones(i).map(move |j| (i, j)))
            .collect()
    }

    fn check_col(&self, col: usize) -> Result<()> {
        if col < self.cols {
            Ok(())
        } else {
            Err(OmvError::IndexOutOfRange {
                index: col,
                limit: self.cols,
            })
        }
    }

    /// Number of rows where columns `x` and `y` differ.
    pub fn hamming_cols(&self, x: usize, y: usize) -> Result<usize> {
        self.check_col(x)?;
        self.check_col(y)?;
        Ok(hamming_words(self.col_words(x), self.col_words(y)))
    }

    /// The difference `M_y - M_x` as a sparse ±1 vector.
    pub fn delta_cols(&self, x: usize, y: usize) -> Result<SparseDelta> {
        self.check_col(x)?;
        self.check_col(y)?;
        Ok(SparseDelta::between(self.col_words(x), self.col_words(y)))
    }

    /// Reference product `Mv` by direct summation over every one-entry.
    pub fn naive_mv<T: Scalar>(&self, v: &[T]) -> Result<Vec<T>> {
        check_len(self.cols, v.len())?;
        Ok((0..self.rows)
            .map(|i| {
                self.row_ones(i).fold(T::zero(), |mut acc, j| {
                    acc += v[j];
                    acc
                })
            })
            .collect())
    }

    pub fn transpose(&self) -> BitMatrix {
        let t = BitMatrix {
            rows: self.cols,
            cols: self.rows,
            words_per_row: self.words_per_col(),
            data: self.mirror().to_vec(),
            col_mirror: OnceLock::new(),
        };
        let _ = t.col_mirror.set(self.data.clone());
        t
    }

    /// Columns selected by index, in the given order.
    pub fn select_cols(&self, cols: &[usize]) -> BitMatrix {
        BitMatrix::from_column_words(self.rows, cols.iter().map(|&j| self.col_words(j)))
            .expect("column words have matching length")
    }
}

impl PartialEq for BitMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl Eq for BitMatrix {}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows.min(32) {
            let line: String = (0..self.cols.min(64))
                .map(|j| if self.get(i, j) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Minus,
    Plus,
}

/// One nonzero of a [`SparseDelta`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeltaEntry {
    index: u32,
    sign: Sign,
}

impl DeltaEntry {
    pub fn new(index: usize, sign: Sign) -> Self {
        DeltaEntry {
            index: u32::try_from(index).expect("delta index exceeds u32"),
            sign,
        }
    }

    #[inline]
    pub fn index(&self) -> usize {
        self.index as usize
    }

    #[inline]
    pub fn sign(&self) -> Sign {
        self.sign
    }
}

/// Sparse difference of two Boolean vectors, entries in increasing index
/// order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SparseDelta {
    entries: Vec<DeltaEntry>,
}

impl SparseDelta {
    pub fn new(entries: Vec<DeltaEntry>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].index >= w[1].index) {
            return Err(OmvError::InvalidInput(
                "delta indices must be strictly increasing".into(),
            ));
        }
        Ok(SparseDelta { entries })
    }

    /// `to - from` for two packed vectors of equal length.
    pub fn between(from: &[u64], to: &[u64]) -> Self {
        debug_assert_eq!(from.len(), to.len());
        let mut entries = Vec::with_capacity(hamming_words(from, to));
        for (w, (&a, &b)) in from.iter().zip(to).enumerate() {
            let mut diff = a ^ b;
            while diff != 0 {
                let tz = diff.trailing_zeros() as usize;
                let sign = if (b >> tz) & 1 == 1 {
                    Sign::Plus
                } else {
                    Sign::Minus
                };
                entries.push(DeltaEntry::new(w * WORD_BITS + tz, sign));
                diff &= diff - 1;
            }
        }
        SparseDelta { entries }
    }

    /// `to - 0`, i.e. every set bit of `to` with sign `+`.
    pub fn from_zero(to: &[u64]) -> Self {
        SparseDelta {
            entries: iter_ones(to)
                .map(|i| DeltaEntry::new(i, Sign::Plus))
                .collect(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn entries(&self) -> &[DeltaEntry] {
        &self.entries
    }

    /// Sparse inner product `<delta, v>`.
    #[inline]
    pub fn dot<T: Scalar>(&self, v: &[T]) -> T {
        let mut acc = T::zero();
        for e in &self.entries {
            match e.sign {
                Sign::Plus => acc += v[e.index()],
                Sign::Minus => acc -= v[e.index()],
            }
        }
        acc
    }

    /// `out += scale * delta`.
    #[inline]
    pub fn axpy<T: Scalar>(&self, scale: T, out: &mut [T]) {
        for e in &self.entries {
            match e.sign {
                Sign::Plus => out[e.index()] += scale,
                Sign::Minus => out[e.index()] -= scale,
            }
        }
    }

    /// Applies the delta to a Boolean vector in place. Fails if an entry
    /// would push a bit outside {0, 1}.
    pub fn apply(&self, bits: &mut [bool]) -> Result<()> {
        for e in &self.entries {
            let i = e.index();
            if i >= bits.len() {
                return Err(OmvError::IndexOutOfRange {
                    index: i,
                    limit: bits.len(),
                });
            }
            match (e.sign, bits[i]) {
                (Sign::Plus, false) => bits[i] = true,
                (Sign::Minus, true) => bits[i] = false,
                _ => {
                    return Err(OmvError::InvalidInput(format!(
                        "delta entry {i} is inconsistent with the target vector"
                    )))
                }
            }
        }
        Ok(())
    }
}
