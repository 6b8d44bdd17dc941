//! Fully dynamic matrix-vector multiplication.
//!
//! The logical matrix is split into horizontal stripes of at most `2^j`
//! rows; each stripe splits its columns into dyadic buckets (see
//! [`buckets`]). Each (stripe, bucket) pair is a submatrix backed by a
//! [`StaticOmv`](crate::engine::StaticOmv). Deletions are postponed as
//! tombstones until a level has collected `2^j / 2` of them.
//!
//! Rows and columns are addressed by stable ids that are never recycled.
//! Query vectors and results are ordered by increasing id.

mod buckets;
pub mod shadow;
pub mod trace;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use buckets::{capacity, ceil_log2, tombstones_full, ColBuckets};

use crate::bitmatrix::{words_for, BitMatrix};
use crate::engine::QueryStats;
use crate::error::{check_len, OmvError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColId(pub u64);

impl fmt::Display for RowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

impl fmt::Display for ColId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

fn pack(bits: &[bool]) -> Vec<u64> {
    let mut words = vec![0u64; words_for(bits.len())];
    for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
        words[i / 64] |= 1 << (i % 64);
    }
    words
}

#[inline]
fn bit(words: &[u64], i: usize) -> bool {
    (words[i / 64] >> (i % 64)) & 1 == 1
}

/// Rebuild counters, for checking amortized bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RebuildStats {
    pub stripe_rebuilds: usize,
    pub rows_rebuilt: usize,
}

#[derive(Clone, Debug)]
struct Stripe {
    row_ids: Vec<RowId>,
    row_dead: Vec<bool>,
    tombstones: usize,
    cols: ColBuckets,
}

impl Stripe {
    /// Packs `rows` (each over the live columns in id order) into a fresh
    /// stripe with every column in the top bucket.
    fn build(rows: Vec<(RowId, Vec<u64>)>, live_cols: &[ColId]) -> Self {
        let (row_ids, words): (Vec<RowId>, Vec<Vec<u64>>) = rows.into_iter().unzip();
        let m = BitMatrix::from_row_words(live_cols.len(), words.iter().map(Vec::as_slice))
            .expect("rows span the live columns");
        let columns = live_cols
            .iter()
            .enumerate()
            .map(|(p, &id)| (id, m.col_words(p).to_vec()))
            .collect();
        Stripe {
            row_dead: vec![false; row_ids.len()],
            tombstones: 0,
            cols: ColBuckets::new(row_ids.len(), columns),
            row_ids,
        }
    }

    fn stored(&self) -> usize {
        self.row_ids.len()
    }

    /// Live rows as packed words over the live columns.
    fn live_rows(&self, col_pos: &[usize], ncols: usize) -> Vec<(RowId, Vec<u64>)> {
        let mut rows = vec![vec![0u64; words_for(ncols)]; self.stored()];
        for (id, words) in self.cols.live_columns() {
            let p = col_pos[id.0 as usize];
            for (slot, row) in rows.iter_mut().enumerate() {
                if bit(words, slot) {
                    row[p / 64] |= 1 << (p % 64);
                }
            }
        }
        self.row_ids
            .iter()
            .zip(&self.row_dead)
            .zip(rows)
            .filter(|((_, &dead), _)| !dead)
            .map(|((&id, _), row)| (id, row))
            .collect()
    }
}

/// Dynamic OMv over a matrix with row and column insertions and deletions.
#[derive(Clone, Debug)]
pub struct DynOmv {
    stripes: Vec<Option<Stripe>>,
    row_loc: HashMap<RowId, (usize, usize)>,
    live_rows: BTreeSet<RowId>,
    live_cols: BTreeSet<ColId>,
    next_row: u64,
    next_col: u64,
    stats: RebuildStats,
}

impl DynOmv {
    /// Rows get ids `0..m`, columns `0..n`. Everything starts in the top
    /// stripe and its top bucket.
    pub fn new(m: &BitMatrix) -> Self {
        let rows = m.rows();
        let live_cols: Vec<ColId> = (0..m.cols() as u64).map(ColId).collect();
        let mut d = DynOmv {
            stripes: Vec::new(),
            row_loc: HashMap::new(),
            live_rows: (0..rows as u64).map(RowId).collect(),
            live_cols: live_cols.iter().copied().collect(),
            next_row: rows as u64,
            next_col: m.cols() as u64,
            stats: RebuildStats::default(),
        };
        if rows > 0 {
            let top = ceil_log2(rows);
            let packed = (0..rows)
                .map(|i| (RowId(i as u64), m.row_words(i).to_vec()))
                .collect();
            d.stripes.resize_with(top + 1, || None);
            d.install(top, Stripe::build(packed, &live_cols));
        }
        d
    }

    /// Empty `0 x 0` structure.
    pub fn empty() -> Self {
        Self::new(&BitMatrix::zeros(0, 0))
    }

    pub fn rows(&self) -> usize {
        self.live_rows.len()
    }

    pub fn cols(&self) -> usize {
        self.live_cols.len()
    }

    pub fn row_ids(&self) -> Vec<RowId> {
        self.live_rows.iter().copied().collect()
    }

    pub fn col_ids(&self) -> Vec<ColId> {
        self.live_cols.iter().copied().collect()
    }

    pub fn contains_row(&self, id: RowId) -> bool {
        self.live_rows.contains(&id)
    }

    pub fn contains_col(&self, id: ColId) -> bool {
        self.live_cols.contains(&id)
    }

    pub fn rebuild_stats(&self) -> RebuildStats {
        self.stats
    }

    /// Per non-empty stripe: (stripe level, column insertions seen, columns
    /// fed to insertion-triggered rebuilds).
    pub fn column_insert_rebuilds(&self) -> Vec<(usize, usize, usize)> {
        self.stripes
            .iter()
            .enumerate()
            .filter_map(|(j, s)| {
                s.as_ref()
                    .map(|s| (j, s.cols.inserts, s.cols.insert_rebuild_columns))
            })
            .collect()
    }

    /// Stored rows per stripe level (0 for empty stripes).
    pub fn stripe_sizes(&self) -> Vec<usize> {
        self.stripes
            .iter()
            .map(|s| s.as_ref().map_or(0, Stripe::stored))
            .collect()
    }

    /// (stored, tombstones) per column bucket of stripe `level`.
    pub fn bucket_sizes(&self, level: usize) -> Vec<(usize, usize)> {
        self.stripes
            .get(level)
            .and_then(Option::as_ref)
            .map(|s| {
                s.cols
                    .buckets
                    .iter()
                    .map(|b| (b.stored(), b.tombstones))
                    .collect()
            })
            .unwrap_or_default()
    }

    fn col_positions(&self) -> Vec<usize> {
        let mut pos = vec![usize::MAX; self.next_col as usize];
        for (p, id) in self.live_cols.iter().enumerate() {
            pos[id.0 as usize] = p;
        }
        pos
    }

    fn row_positions(&self) -> Vec<usize> {
        let mut pos = vec![usize::MAX; self.next_row as usize];
        for (p, id) in self.live_rows.iter().enumerate() {
            pos[id.0 as usize] = p;
        }
        pos
    }

    fn install(&mut self, level: usize, stripe: Stripe) {
        self.stats.stripe_rebuilds += 1;
        self.stats.rows_rebuilt += stripe.stored();
        for (slot, &id) in stripe.row_ids.iter().enumerate() {
            self.row_loc.insert(id, (level, slot));
        }
        self.stripes[level] = Some(stripe);
    }

    fn take_live_rows(&mut self, level: usize, col_pos: &[usize]) -> Vec<(RowId, Vec<u64>)> {
        let ncols = self.cols();
        match self.stripes[level].take() {
            Some(s) => s.live_rows(col_pos, ncols),
            None => Vec::new(),
        }
    }

    /// Appends a row given as bits over the live columns (increasing id).
    pub fn insert_row(&mut self, bits: &[bool]) -> Result<RowId> {
        check_len(self.cols(), bits.len())?;
        let id = RowId(self.next_row);
        self.next_row += 1;
        self.live_rows.insert(id);

        let col_pos = self.col_positions();
        let live_cols = self.col_ids();
        let mut pending = vec![(id, pack(bits))];
        let mut level = 0;
        loop {
            if level == self.stripes.len() {
                self.stripes.push(None);
            }
            let mut rows = self.take_live_rows(level, &col_pos);
            rows.append(&mut pending);
            if rows.len() > capacity(level) {
                pending = rows;
                level += 1;
                continue;
            }
            rows.sort_unstable_by_key(|(id, _)| *id);
            self.install(level, Stripe::build(rows, &live_cols));
            return Ok(id);
        }
    }

    /// Tombstones a row; its stripe is re-packed once the quota is reached.
    pub fn delete_row(&mut self, id: RowId) -> Result<()> {
        if !self.live_rows.remove(&id) {
            return Err(OmvError::UnknownId(id.0));
        }
        let (level, slot) = self.row_loc.remove(&id).expect("live row is located");
        let stripe = self.stripes[level].as_mut().expect("located stripe exists");
        stripe.row_dead[slot] = true;
        stripe.tombstones += 1;
        if tombstones_full(level, stripe.tombstones) {
            let col_pos = self.col_positions();
            let live_cols = self.col_ids();
            let rows = self.take_live_rows(level, &col_pos);
            if !rows.is_empty() {
                self.install(level, Stripe::build(rows, &live_cols));
            }
        }
        Ok(())
    }

    /// Appends a column given as bits over the live rows (increasing id).
    pub fn insert_col(&mut self, bits: &[bool]) -> Result<ColId> {
        check_len(self.rows(), bits.len())?;
        let id = ColId(self.next_col);
        self.next_col += 1;
        let row_pos = self.row_positions();
        for stripe in self.stripes.iter_mut().flatten() {
            let mut words = vec![0u64; words_for(stripe.stored())];
            for (slot, (rid, &dead)) in stripe.row_ids.iter().zip(&stripe.row_dead).enumerate() {
                if !dead && bits[row_pos[rid.0 as usize]] {
                    words[slot / 64] |= 1 << (slot % 64);
                }
            }
            stripe.cols.insert(id, words);
        }
        self.live_cols.insert(id);
        Ok(id)
    }

    /// Tombstones a column in every stripe.
    pub fn delete_col(&mut self, id: ColId) -> Result<()> {
        if !self.live_cols.remove(&id) {
            return Err(OmvError::UnknownId(id.0));
        }
        for stripe in self.stripes.iter_mut().flatten() {
            let found = stripe.cols.delete(id);
            debug_assert!(found, "live column {id} missing from a stripe");
        }
        Ok(())
    }

    /// `Mv` over the live logical matrix; `v` is indexed by increasing column id.
    pub fn query<T: Scalar>(&self, v: &[T]) -> Result<Vec<T>> {
        self.query_with_stats(v).map(|(out, _)| out)
    }

    pub fn query_with_stats<T: Scalar>(&self, v: &[T]) -> Result<(Vec<T>, QueryStats)> {
        check_len(self.cols(), v.len())?;
        let mut values = vec![T::zero(); self.next_col as usize];
        for (id, &x) in self.live_cols.iter().zip(v) {
            values[id.0 as usize] = x;
        }
        let row_pos = self.row_positions();
        let mut out = vec![T::zero(); self.rows()];
        let mut stats = QueryStats::default();
        let mut partial = Vec::new();
        for stripe in self.stripes.iter().flatten() {
            partial.clear();
            partial.resize(stripe.stored(), T::zero());
            stripe.cols.query_into(&values, &mut partial, &mut stats);
            for ((rid, &dead), &p) in stripe.row_ids.iter().zip(&stripe.row_dead).zip(&partial) {
                if !dead {
                    out[row_pos[rid.0 as usize]] = p;
                }
            }
        }
        Ok((out, stats))
    }

    /// Entry lookup by ids.
    pub fn get(&self, row: RowId, col: ColId) -> Result<bool> {
        let &(level, slot) = self.row_loc.get(&row).ok_or(OmvError::UnknownId(row.0))?;
        let stripe = self.stripes[level].as_ref().expect("located stripe exists");
        let &(b, s) = stripe
            .cols
            .slot
            .get(&col)
            .ok_or(OmvError::UnknownId(col.0))?;
        Ok(bit(&stripe.cols.buckets[b].columns[s], slot))
    }

    /// The live logical matrix, rows and columns in id order.
    pub fn to_matrix(&self) -> BitMatrix {
        let row_pos = self.row_positions();
        let col_pos = self.col_positions();
        let mut m = BitMatrix::zeros(self.rows(), self.cols());
        for stripe in self.stripes.iter().flatten() {
            for (cid, words) in stripe.cols.live_columns() {
                let c = col_pos[cid.0 as usize];
                for (slot, (rid, &dead)) in stripe.row_ids.iter().zip(&stripe.row_dead).enumerate()
                {
                    if !dead && bit(words, slot) {
                        m.set(row_pos[rid.0 as usize], c, true);
                    }
                }
            }
        }
        m
    }

    /// Walks every stripe and bucket checking capacity, tombstone and index
    /// invariants.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let mut located = 0;
        for (level, stripe) in self.stripes.iter().enumerate() {
            let Some(stripe) = stripe else { continue };
            if stripe.stored() > capacity(level) {
                return Err(format!("stripe {level} stores {} rows", stripe.stored()));
            }
            if stripe.stored() == 0 {
                return Err(format!("stripe {level} is empty but present"));
            }
            if tombstones_full(level, stripe.tombstones) && stripe.tombstones > 0 {
                return Err(format!(
                    "stripe {level} holds {} tombstones",
                    stripe.tombstones
                ));
            }
            let dead = stripe.row_dead.iter().filter(|&&d| d).count();
            if dead != stripe.tombstones || stripe.row_dead.len() != stripe.stored() {
                return Err(format!("stripe {level} tombstone bookkeeping is off"));
            }
            if stripe.cols.rows != stripe.stored() {
                return Err(format!("stripe {level} buckets have the wrong height"));
            }
            for (slot, (rid, &d)) in stripe.row_ids.iter().zip(&stripe.row_dead).enumerate() {
                if !d {
                    located += 1;
                    if self.row_loc.get(rid) != Some(&(level, slot))
                        || !self.live_rows.contains(rid)
                    {
                        return Err(format!("row {rid} is mislocated"));
                    }
                }
            }
            stripe
                .cols
                .audit()
                .map_err(|e| format!("stripe {level}: {e}"))?;
            if stripe.cols.slot.len() != self.live_cols.len()
                || self
                    .live_cols
                    .iter()
                    .any(|c| !stripe.cols.slot.contains_key(c))
            {
                return Err(format!(
                    "stripe {level} column set differs from the live set"
                ));
            }
        }
        if located != self.live_rows.len() || self.row_loc.len() != located {
            return Err(format!(
                "{located} located rows, {} live",
                self.live_rows.len()
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> BitMatrix {
        BitMatrix::from_fn(rows, cols, |_, _| rng.random_bool(0.5))
    }

    fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<i64> {
        (0..n).map(|_| rng.random_range(-50..=50)).collect()
    }

    #[test]
    fn empty_structure() {
        let d = DynOmv::empty();
        assert_eq!(d.rows(), 0);
        assert_eq!(d.cols(), 0);
        assert!(d.stripe_sizes().iter().all(|&s| s == 0));
        assert_eq!(d.query::<i64>(&[]).unwrap(), Vec::<i64>::new());
        d.audit().unwrap();
    }

    #[test]
    fn one_by_one() {
        let d = DynOmv::new(&BitMatrix::ones(1, 1));
        assert_eq!(d.stripe_sizes(), vec![1]);
        assert_eq!(d.bucket_sizes(0), vec![(1, 0)]);
        assert_eq!(d.query(&[3i64]).unwrap(), vec![3]);
    }

    #[test]
    fn fresh_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_matrix(&mut rng, 8, 8);
        let d = DynOmv::new(&m);
        d.audit().unwrap();
        for _ in 0..50 {
            let v = random_vec(&mut rng, 8);
            assert_eq!(d.query(&v).unwrap(), m.naive_mv(&v).unwrap());
        }
        assert_eq!(d.to_matrix(), m);
    }

    #[test]
    fn column_cascade_follows_binary_counter() {
        let mut d = DynOmv::new(&BitMatrix::zeros(2, 0));
        d.insert_col(&[true, false]).unwrap();
        assert_eq!(d.bucket_sizes(1), vec![(1, 0)]);
        d.insert_col(&[false, true]).unwrap();
        assert_eq!(d.bucket_sizes(1), vec![(0, 0), (2, 0)]);
        d.insert_col(&[true, true]).unwrap();
        assert_eq!(d.bucket_sizes(1), vec![(1, 0), (2, 0)]);
        d.audit().unwrap();
        assert_eq!(d.query(&[1i64, 10, 100]).unwrap(), vec![101, 110]);
    }

    #[test]
    fn insert_into_empty() {
        let mut d = DynOmv::empty();
        let r = d.insert_row(&[]).unwrap();
        let c = d.insert_col(&[true]).unwrap();
        assert!(d.get(r, c).unwrap());
        assert_eq!(d.bucket_sizes(0), vec![(1, 0)]);
        assert_eq!(d.query(&[4i64]).unwrap(), vec![4]);
    }

    #[test]
    fn insert_then_delete_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_matrix(&mut rng, 6, 5);
        let mut d = DynOmv::new(&m);
        let v = random_vec(&mut rng, 5);
        let before = d.query(&v).unwrap();
        let c = d.insert_col(&[true; 6]).unwrap();
        d.delete_col(c).unwrap();
        assert_eq!(d.query(&v).unwrap(), before);
        let r = d.insert_row(&[true; 5]).unwrap();
        d.delete_row(r).unwrap();
        assert_eq!(d.query(&v).unwrap(), before);
        assert!(matches!(d.delete_col(c), Err(OmvError::UnknownId(_))));
        assert!(matches!(d.delete_row(r), Err(OmvError::UnknownId(_))));
        d.audit().unwrap();
    }

    #[test]
    fn delete_all_columns_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_matrix(&mut rng, 7, 9);
        let mut d = DynOmv::new(&m);
        for c in d.col_ids() {
            d.delete_col(c).unwrap();
            d.audit().unwrap();
        }
        assert_eq!(d.query::<i64>(&[]).unwrap(), vec![0; 7]);
    }

    #[test]
    fn single_column_scales() {
        let mut d = DynOmv::new(&BitMatrix::zeros(3, 0));
        d.insert_col(&[true, false, true]).unwrap();
        assert_eq!(d.query(&[-4i64]).unwrap(), vec![-4, 0, -4]);
    }

    #[test]
    fn dimension_checks() {
        let mut d = DynOmv::new(&BitMatrix::zeros(2, 3));
        assert!(matches!(
            d.insert_row(&[true]),
            Err(OmvError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            d.insert_col(&[true]),
            Err(OmvError::DimensionMismatch { .. })
        ));
        assert!(d.query(&[1i64]).is_err());
    }

    #[test]
    fn row_stripes_cascade() {
        let mut d = DynOmv::new(&BitMatrix::zeros(0, 2));
        for i in 0..7 {
            d.insert_row(&[i % 2 == 0, i % 3 == 0]).unwrap();
            d.audit().unwrap();
        }
        assert_eq!(d.stripe_sizes(), vec![1, 2, 4]);
        assert_eq!(d.query(&[1i64, 10]).unwrap(), vec![11, 0, 1, 10, 1, 0, 11]);
    }

    #[test]
    fn random_mixed_ops_match_to_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_matrix(&mut rng, 10, 10);
        let mut d = DynOmv::new(&m);
        for _ in 0..600 {
            match rng.random_range(0..5) {
                0 => {
                    let bits: Vec<bool> = (0..d.rows()).map(|_| rng.random_bool(0.4)).collect();
                    d.insert_col(&bits).unwrap();
                }
                1 => {
                    let bits: Vec<bool> = (0..d.cols()).map(|_| rng.random_bool(0.4)).collect();
                    d.insert_row(&bits).unwrap();
                }
                2 if d.cols() > 0 => {
                    let ids = d.col_ids();
                    d.delete_col(ids[rng.random_range(0..ids.len())]).unwrap();
                }
                3 if d.rows() > 0 => {
                    let ids = d.row_ids();
                    d.delete_row(ids[rng.random_range(0..ids.len())]).unwrap();
                }
                _ => {
                    let v = random_vec(&mut rng, d.cols());
                    let expect = d.to_matrix().naive_mv(&v).unwrap();
                    assert_eq!(d.query(&v).unwrap(), expect);
                }
            }
            d.audit().unwrap();
        }
    }
}
