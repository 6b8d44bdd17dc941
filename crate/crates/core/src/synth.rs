//! Generators for matrices of known (corrupted) VC-dimension.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitmatrix::BitMatrix;
use crate::error::{OmvError, Result};

/// Independent generator for `(seed, name)`: the seed picks the key, a hash
/// of the name picks the stream.
pub fn stream_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(h);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Interval,
    Grid,
    Halfplane,
    Random,
    HadamardLike,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Interval,
        Family::Grid,
        Family::Halfplane,
        Family::Random,
        Family::HadamardLike,
    ];

    /// Documented VC-dimension bound, for reports only.
    pub fn claimed_d(self) -> Option<u32> {
        match self {
            Family::Interval => Some(2),
            Family::Grid => Some(4),
            Family::Halfplane => Some(3),
            Family::Random | Family::HadamardLike => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Interval => "interval",
            Family::Grid => "grid",
            Family::Halfplane => "halfplane",
            Family::Random => "random",
            Family::HadamardLike => "hadamard_like",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = OmvError;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| OmvError::InvalidInput(format!("unknown family `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthSpec {
    pub family: Family,
    pub rows: usize,
    pub cols: usize,
    pub corruption_per_row: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(family: Family, rows: usize, cols: usize) -> Self {
        SynthSpec {
            family,
            rows,
            cols,
            corruption_per_row: 0,
            seed: 0,
        }
    }

    pub fn with_corruption(mut self, per_row: usize) -> Self {
        self.corruption_per_row = per_row;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn claimed_d(&self) -> Option<u32> {
        self.family.claimed_d()
    }

    pub fn generate(&self) -> Result<BitMatrix> {
        let (m, n) = (self.rows, self.cols);
        let mut rng = stream_rng(self.seed, self.family.name());
        let mut out = match self.family {
            Family::Interval => {
                let k = m.max(n);
                let intervals: Vec<(f64, f64)> = (0..k)
                    .map(|_| {
                        let center: f64 = rng.random();
                        let len = rng.random_range(0.0..=0.2);
                        (center - len / 2.0, center + len / 2.0)
                    })
                    .collect();
                interval_matrix(&intervals, m, n)
            }
            Family::Grid => grid_matrix(m, n)?,
            Family::Halfplane => {
                let planes: Vec<(f64, f64, f64)> = (0..m)
                    .map(|_| {
                        let theta = rng.random_range(0.0..std::f64::consts::TAU);
                        (theta.cos(), theta.sin(), rng.random_range(-0.5..0.5))
                    })
                    .collect();
                let points: Vec<(f64, f64)> = (0..n)
                    .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                BitMatrix::from_fn(m, n, |i, j| {
                    let (ax, ay, b) = planes[i];
                    ax * points[j].0 + ay * points[j].1 >= b
                })
            }
            Family::Random => BitMatrix::from_fn(m, n, |_, _| rng.random_bool(0.5)),
            Family::HadamardLike => BitMatrix::from_fn(m, n, |i, j| (i & j).count_ones() % 2 == 1),
        };
        if self.corruption_per_row > 0 {
            corrupt(
                &mut out,
                self.corruption_per_row,
                &mut stream_rng(self.seed, "corruption"),
            );
        }
        Ok(out)
    }
}

/// `M_ij = 1` iff intervals `i` and `j` intersect and `i ≠ j`.
pub fn interval_matrix(intervals: &[(f64, f64)], m: usize, n: usize) -> BitMatrix {
    BitMatrix::from_fn(m, n, |i, j| {
        let (a, b) = (intervals[i], intervals[j]);
        i != j && a.0 <= b.1 && b.0 <= a.1
    })
}

/// Adjacency of the `k×k` grid graph, `k² = n`; row `i` is vertex `i mod n`.
pub fn grid_matrix(m: usize, n: usize) -> Result<BitMatrix> {
    let k = (n as f64).sqrt().round() as usize;
    if k * k != n {
        return Err(OmvError::InvalidInput(format!(
            "grid needs a square column count, got {n}"
        )));
    }
    Ok(BitMatrix::from_fn(m, n, |i, j| {
        let i = i % n;
        let (r1, c1) = (i / k, i % k);
        let (r2, c2) = (j / k, j % k);
        r1.abs_diff(r2) + c1.abs_diff(c2) == 1
    }))
}

/// Flips `min(per_row, n)` distinct uniformly chosen entries in every row.
pub fn corrupt(m: &mut BitMatrix, per_row: usize, rng: &mut impl Rng) {
    let n = m.cols();
    let k = per_row.min(n);
    for i in 0..m.rows() {
        for j in sample(rng, n, k) {
            m.flip(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        for family in [Family::Interval, Family::Halfplane, Family::Random] {
            let spec = SynthSpec::new(family, 20, 30)
                .with_seed(3)
                .with_corruption(2);
            assert_eq!(spec.generate().unwrap(), spec.generate().unwrap());
            assert_ne!(
                spec.generate().unwrap(),
                spec.clone().with_seed(4).generate().unwrap()
            );
        }
    }

    #[test]
    fn coincident_intervals() {
        let m = interval_matrix(&[(0.2, 0.4); 4], 4, 4);
        assert_eq!(m, BitMatrix::from_fn(4, 4, |i, j| i != j));
    }

    #[test]
    fn interval_symmetric() {
        let m = SynthSpec::new(Family::Interval, 50, 50)
            .with_seed(9)
            .generate()
            .unwrap();
        assert_eq!(m, m.transpose());
        assert!((0..50).all(|i| !m.get(i, i)));
    }

    #[test]
    fn corruption_counts() {
        let base = SynthSpec::new(Family::Interval, 40, 40).with_seed(1);
        let clean = base.generate().unwrap();
        assert_eq!(clean, base.clone().with_corruption(0).generate().unwrap());
        for c in [1, 5, 40, 100] {
            let dirty = base.clone().with_corruption(c).generate().unwrap();
            for i in 0..40 {
                let flips = (0..40)
                    .filter(|&j| clean.get(i, j) != dirty.get(i, j))
                    .count();
                assert_eq!(flips, c.min(40));
            }
        }
    }

    #[test]
    fn hadamard_four() {
        let m = SynthSpec::new(Family::HadamardLike, 4, 4)
            .generate()
            .unwrap();
        let expect =
            BitMatrix::from_coords(4, 4, &[(1, 1), (1, 3), (2, 2), (2, 3), (3, 1), (3, 2)])
                .unwrap();
        assert_eq!(m, expect);
        for x in 0..4 {
            for y in 0..4 {
                if x != y {
                    assert_eq!(m.hamming_cols(x, y).unwrap(), 2);
                }
            }
        }
    }

    #[test]
    fn grid_shape() {
        let m = SynthSpec::new(Family::Grid, 9, 9).generate().unwrap();
        assert_eq!(m.count_ones(), 24);
        assert_eq!(m, m.transpose());
        assert!(SynthSpec::new(Family::Grid, 8, 8).generate().is_err());
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("nope".parse::<Family>().is_err());
        assert_eq!(Family::Interval.claimed_d(), Some(2));
        assert_eq!(Family::Random.claimed_d(), None);
    }
}
