//! Static query engine: preprocess once, then answer `Mv` in time
//! proportional to tree weight.

use crate::bitmatrix::BitMatrix;
use crate::error::{check_len, OmvError, Result};
use crate::scalar::Scalar;
use crate::tree::{build_mst, DeltaTree};

/// Work counters for one query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QueryStats {
    /// Delta-label entries visited.
    pub touched_nonzeros: usize,
    /// Constant-time per-node and per-output steps.
    pub dense_ops: usize,
}

impl std::ops::AddAssign for QueryStats {
    fn add_assign(&mut self, rhs: Self) {
        self.touched_nonzeros += rhs.touched_nonzeros;
        self.dense_ops += rhs.dense_ops;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    /// Walk a tree over the rows of `M` (prefix sums down the tree).
    RowTree,
    /// Walk a tree over the columns of `M` (subtree sums up the tree).
    ColTree,
}

/// A matrix with minimum spanning trees over both its columns and its rows.
#[derive(Clone, Debug)]
pub struct StaticOmv {
    matrix: BitMatrix,
    col_tree: DeltaTree,
    row_tree: DeltaTree,
}

impl StaticOmv {
    pub fn preprocess(matrix: BitMatrix) -> Self {
        let col_tree = build_mst(&matrix);
        let row_tree = build_mst(&matrix.transpose());
        StaticOmv {
            matrix,
            col_tree,
            row_tree,
        }
    }

    #[inline]
    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    /// Tree over the columns of `M`.
    pub fn col_tree(&self) -> &DeltaTree {
        &self.col_tree
    }

    /// Tree over the columns of `M^T`, i.e. the rows of `M`.
    pub fn row_tree(&self) -> &DeltaTree {
        &self.row_tree
    }

    pub fn cost_row(&self) -> usize {
        self.row_tree.weight() + self.rows() + self.cols()
    }

    pub fn cost_col(&self) -> usize {
        self.col_tree.weight() + self.rows() + self.cols()
    }

    /// The algorithm [`StaticOmv::mv`] dispatches to.
    pub fn preferred(&self) -> Algo {
        if self.cost_row() <= self.cost_col() {
            Algo::RowTree
        } else {
            Algo::ColTree
        }
    }

    pub fn mv<T: Scalar>(&self, v: &[T]) -> Result<(Vec<T>, QueryStats)> {
        self.mv_with(self.preferred(), v)
    }

    pub fn mv_with<T: Scalar>(&self, algo: Algo, v: &[T]) -> Result<(Vec<T>, QueryStats)> {
        match algo {
            Algo::RowTree => self.mv_rowtree(v),
            Algo::ColTree => self.mv_coltree(v),
        }
    }

    /// `Phi_x = Phi_parent + <label_x, v>` in preorder; the virtual root row
    /// is zero, so `Phi_x = <row x, v>` for every real row.
    pub fn mv_rowtree<T: Scalar>(&self, v: &[T]) -> Result<(Vec<T>, QueryStats)> {
        check_len(self.cols(), v.len())?;
        let tree = &self.row_tree;
        let mut phi = vec![T::zero(); tree.node_count()];
        let mut touched = 0;
        for &x in &tree.preorder()[1..] {
            let parent = tree.parent(x).expect("non-root node has a parent");
            let label = tree.label(x);
            touched += label.len();
            phi[x] = phi[parent] + label.dot(v);
        }
        phi.truncate(self.rows());
        let stats = QueryStats {
            touched_nonzeros: touched,
            dense_ops: tree.node_count() + self.rows(),
        };
        Ok((phi, stats))
    }

    /// Subtree sums `sigma_x = v_x + sum over children` bottom-up, then
    /// `Mv = sum_x label_x * sigma_x`. The virtual root carries `v = 0`.
    pub fn mv_coltree<T: Scalar>(&self, v: &[T]) -> Result<(Vec<T>, QueryStats)> {
        check_len(self.cols(), v.len())?;
        let tree = &self.col_tree;
        let root = tree.root();
        let mut sigma = v.to_vec();
        sigma.push(T::zero());
        for &x in tree.preorder().iter().rev() {
            if let Some(p) = tree.parent(x) {
                let s = sigma[x];
                sigma[p] += s;
            }
        }
        let mut out = vec![T::zero(); self.rows()];
        let mut touched = 0;
        for (x, &s) in sigma.iter().enumerate() {
            if x == root {
                continue;
            }
            let label = tree.label(x);
            touched += label.len();
            label.axpy(s, &mut out);
        }
        let stats = QueryStats {
            touched_nonzeros: touched,
            dense_ops: tree.node_count() + self.rows(),
        };
        Ok((out, stats))
    }

    /// Integer product `A * B` computed one column of `B` at a time.
    pub fn bmm(&self, b: &BitMatrix) -> Result<IntMatrix> {
        if b.rows() != self.cols() {
            return Err(OmvError::DimensionMismatch {
                expected: self.cols(),
                actual: b.rows(),
            });
        }
        let mut out = IntMatrix::zeros(self.rows(), b.cols());
        let mut column = vec![0i64; b.rows()];
        for j in 0..b.cols() {
            column.iter_mut().for_each(|x| *x = 0);
            for i in b.col_ones(j) {
                column[i] = 1;
            }
            let (prod, _) = self.mv(&column)?;
            for (i, x) in prod.into_iter().enumerate() {
                out.set(i, j, x);
            }
        }
        Ok(out)
    }
}

/// Dense row-major integer matrix, the output of [`StaticOmv::bmm`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: i64) {
        self.data[i * self.cols + j] = x;
    }

    /// Boolean product: entries `>= 1` become one.
    pub fn threshold(&self) -> BitMatrix {
        BitMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) >= 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(rng: &mut impl Rng, max: usize) -> (BitMatrix, Vec<i64>) {
        let rows = rng.random_range(0..=max);
        let cols = rng.random_range(0..=max);
        let p = rng.random_range(0.0..1.0);
        let m = BitMatrix::from_fn(rows, cols, |_, _| rng.random_bool(p));
        let v = (0..cols).map(|_| rng.random_range(-1000..=1000)).collect();
        (m, v)
    }

    #[test]
    fn preprocess_cases() {
        let s = StaticOmv::preprocess(BitMatrix::zeros(5, 7));
        assert_eq!((s.col_tree().weight(), s.row_tree().weight()), (0, 0));
        let s = StaticOmv::preprocess(BitMatrix::identity(3));
        assert_eq!(s.col_tree().weight(), 5);

        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let m = BitMatrix::from_fn(64, 64, |_, _| rng.random_bool(0.5));
        let s = StaticOmv::preprocess(m.clone());
        let t = m.transpose();
        for x in 0..64 {
            let col: Vec<bool> = (0..64).map(|i| m.get(i, x)).collect();
            assert_eq!(s.col_tree().reconstruct(x).unwrap(), col);
            let row: Vec<bool> = (0..64).map(|j| t.get(j, x)).collect();
            assert_eq!(s.row_tree().reconstruct(x).unwrap(), row);
        }
    }

    #[test]
    fn rowtree_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = BitMatrix::from_fn(9, 6, |_, _| rng.random_bool(0.5));
        let s = StaticOmv::preprocess(m);
        assert_eq!(s.mv_rowtree(&[0i64; 6]).unwrap().0, vec![0; 9]);
        let id = StaticOmv::preprocess(BitMatrix::identity(3));
        assert_eq!(id.mv_rowtree(&[5i64, -2, 7]).unwrap().0, vec![5, -2, 7]);
        assert!(id.mv_rowtree(&[1i64, 2]).is_err());
    }

    #[test]
    fn coltree_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = BitMatrix::from_fn(12, 7, |_, _| rng.random_bool(0.4));
        let s = StaticOmv::preprocess(m.clone());
        for j in 0..7 {
            let mut e = vec![0i64; 7];
            e[j] = 1;
            let col: Vec<i64> = (0..12).map(|i| m.get(i, j) as i64).collect();
            assert_eq!(s.mv_coltree(&e).unwrap().0, col);
        }

        let c = BitMatrix::from_fn(10, 5, |i, _| i % 3 == 1);
        let s = StaticOmv::preprocess(c);
        let v = [3i64, -1, 4, 1, -5];
        let (out, stats) = s.mv_coltree(&v).unwrap();
        let expected: Vec<i64> = (0..10).map(|i| if i % 3 == 1 { 2 } else { 0 }).collect();
        assert_eq!(out, expected);
        assert_eq!(stats.touched_nonzeros, 3);
    }

    #[test]
    fn dispatch_prefers_cheaper_tree() {
        // Ten copies of one row: the row tree is just the root edge.
        let rows = BitMatrix::from_fn(10, 6, |_, j| j < 3 || j == 5);
        let s = StaticOmv::preprocess(rows);
        assert!(s.row_tree().weight() <= 4);
        assert_eq!(s.preferred(), Algo::RowTree);

        let cols = BitMatrix::from_fn(6, 10, |i, _| i < 3 || i == 5);
        let s = StaticOmv::preprocess(cols);
        assert!(s.col_tree().weight() <= 4);
        assert_eq!(s.preferred(), Algo::ColTree);
    }

    #[test]
    fn real_vectors_within_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = BitMatrix::from_fn(40, 50, |_, _| rng.random_bool(0.3));
            let v: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = StaticOmv::preprocess(m.clone());
            let naive = m.naive_mv(&v).unwrap();
            let tol = 1e-9 * (1.0 + v.iter().map(|x| x.abs()).sum::<f64>());
            for algo in [Algo::RowTree, Algo::ColTree] {
                let (out, _) = s.mv_with(algo, &v).unwrap();
                for (a, b) in out.iter().zip(&naive) {
                    assert!((a - b).abs() <= tol);
                }
            }
        }
    }

    #[test]
    fn bmm_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = BitMatrix::from_fn(7, 5, |_, _| rng.random_bool(0.5));
        let s = StaticOmv::preprocess(a.clone());
        let prod = s.bmm(&BitMatrix::identity(5)).unwrap();
        assert_eq!(prod.threshold(), a);
        for i in 0..7 {
            for j in 0..5 {
                assert_eq!(prod.get(i, j), a.get(i, j) as i64);
            }
        }

        let ones = StaticOmv::preprocess(BitMatrix::ones(2, 2));
        let p = ones.bmm(&BitMatrix::ones(2, 2)).unwrap();
        assert!((0..2).all(|i| (0..2).all(|j| p.get(i, j) == 2)));
        assert_eq!(p.threshold(), BitMatrix::ones(2, 2));
        assert!(ones.bmm(&BitMatrix::ones(3, 2)).is_err());
    }

    #[test]
    fn bmm_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..10 {
            let a = BitMatrix::from_fn(32, 32, |_, _| rng.random_bool(0.2));
            let b = BitMatrix::from_fn(32, 32, |_, _| rng.random_bool(0.2));
            let prod = StaticOmv::preprocess(a.clone()).bmm(&b).unwrap();
            for i in 0..32 {
                for j in 0..32 {
                    let count = (0..32).filter(|&k| a.get(i, k) && b.get(k, j)).count();
                    assert_eq!(prod.get(i, j), count as i64);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn both_trees_match_naive(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (m, v) = random_instance(&mut rng, 90);
            let s = StaticOmv::preprocess(m.clone());
            let naive = m.naive_mv(&v).unwrap();
            let (row, rs) = s.mv_rowtree(&v).unwrap();
            let (col, cs) = s.mv_coltree(&v).unwrap();
            prop_assert_eq!(&row, &naive);
            prop_assert_eq!(&col, &naive);
            prop_assert!(rs.touched_nonzeros <= s.row_tree().weight());
            prop_assert!(cs.touched_nonzeros <= s.col_tree().weight());
            let bound = 2 * (m.rows() + m.cols()) + 2;
            prop_assert!(rs.dense_ops <= bound && cs.dense_ops <= bound);
        }

        #[test]
        fn linear_in_the_query(seed in any::<u64>(), alpha in -50i64..50, beta in -50i64..50) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (m, u) = random_instance(&mut rng, 60);
            let w: Vec<i64> = (0..m.cols()).map(|_| rng.random_range(-1000..=1000)).collect();
            let s = StaticOmv::preprocess(m);
            let combo: Vec<i64> = u.iter().zip(&w).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = s.mv(&combo).unwrap().0;
            let (mu, mw) = (s.mv(&u).unwrap().0, s.mv(&w).unwrap().0);
            let rhs: Vec<i64> = mu.iter().zip(&mw).map(|(a, b)| alpha * a + beta * b).collect();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
