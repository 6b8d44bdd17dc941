//! Dyadic column buckets over a fixed set of row slots.
//!
//! Bucket `i` stores at most `2^i` columns and fewer than `2^i / 2`
//! tombstones. New columns enter bucket 0; an overflowing bucket hands its
//! live columns to the next one, binary-counter style. Every bucket whose
//! contents change rebuilds its static engine.

use std::collections::HashMap;

use super::ColId;
use crate::bitmatrix::BitMatrix;
use crate::engine::{QueryStats, StaticOmv};
use crate::scalar::Scalar;

#[inline]
pub(crate) fn capacity(level: usize) -> usize {
    1usize << level
}

/// True once a level has accumulated its quota of postponed deletions.
#[inline]
pub(crate) fn tombstones_full(level: usize, tombstones: usize) -> bool {
    2 * tombstones >= capacity(level)
}

/// Smallest `i` with `2^i >= k`.
pub(crate) fn ceil_log2(k: usize) -> usize {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    }
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Bucket {
    pub(crate) ids: Vec<ColId>,
    pub(crate) dead: Vec<bool>,
    pub(crate) tombstones: usize,
    pub(crate) columns: Vec<Vec<u64>>,
    pub(crate) engine: Option<StaticOmv>,
}

impl Bucket {
    pub(crate) fn stored(&self) -> usize {
        self.ids.len()
    }

    fn take_live(&mut self) -> Vec<(ColId, Vec<u64>)> {
        let taken = std::mem::take(self);
        taken
            .ids
            .into_iter()
            .zip(taken.columns)
            .zip(taken.dead)
            .filter(|(_, dead)| !dead)
            .map(|(entry, _)| entry)
            .collect()
    }

    fn push(&mut self, id: ColId, column: Vec<u64>) {
        self.ids.push(id);
        self.dead.push(false);
        self.columns.push(column);
    }

    pub(crate) fn assemble(&self, rows: usize) -> BitMatrix {
        BitMatrix::from_column_words(rows, self.columns.iter().map(Vec::as_slice))
            .expect("stored columns match the stripe height")
    }

    fn rebuild(&mut self, rows: usize) {
        self.engine = if self.ids.is_empty() {
            None
        } else {
            Some(StaticOmv::preprocess(self.assemble(rows)))
        };
    }
}

#[derive(Clone, Debug)]
pub(crate) struct ColBuckets {
    pub(crate) rows: usize,
    pub(crate) buckets: Vec<Bucket>,
    pub(crate) slot: HashMap<ColId, (usize, usize)>,
    /// Columns fed to engine rebuilds triggered by insertions.
    pub(crate) insert_rebuild_columns: usize,
    pub(crate) inserts: usize,
}

impl ColBuckets {
    /// Places every column in the single top bucket.
    pub(crate) fn new(rows: usize, columns: Vec<(ColId, Vec<u64>)>) -> Self {
        let top = ceil_log2(columns.len());
        let mut cb = ColBuckets {
            rows,
            buckets: vec![Bucket::default(); top + 1],
            slot: HashMap::with_capacity(columns.len()),
            insert_rebuild_columns: 0,
            inserts: 0,
        };
        if !columns.is_empty() {
            for (id, col) in columns {
                cb.buckets[top].push(id, col);
            }
            cb.refresh(top);
        }
        cb
    }

    fn reindex(&mut self, level: usize) {
        let bucket = &self.buckets[level];
        for (s, (&id, &dead)) in bucket.ids.iter().zip(&bucket.dead).enumerate() {
            if !dead {
                self.slot.insert(id, (level, s));
            }
        }
    }

    fn refresh(&mut self, level: usize) {
        self.buckets[level].rebuild(self.rows);
        self.reindex(level);
    }

    pub(crate) fn insert(&mut self, id: ColId, column: Vec<u64>) {
        debug_assert_eq!(column.len(), crate::bitmatrix::words_for(self.rows));
        if self.buckets.is_empty() {
            self.buckets.push(Bucket::default());
        }
        self.buckets[0].push(id, column);
        let mut level = 0;
        while self.buckets[level].stored() > capacity(level) {
            let moved = self.buckets[level].take_live();
            if level + 1 == self.buckets.len() {
                self.buckets.push(Bucket::default());
            }
            for (id, col) in moved {
                self.buckets[level + 1].push(id, col);
            }
            level += 1;
        }
        self.inserts += 1;
        self.insert_rebuild_columns += self.buckets[level].stored();
        self.refresh(level);
    }

    /// Tombstones `id`; purges its bucket once the quota is reached.
    /// Returns false if `id` is not stored here.
    pub(crate) fn delete(&mut self, id: ColId) -> bool {
        let Some((level, s)) = self.slot.remove(&id) else {
            return false;
        };
        let bucket = &mut self.buckets[level];
        bucket.dead[s] = true;
        bucket.tombstones += 1;
        if tombstones_full(level, bucket.tombstones) {
            let live = bucket.take_live();
            for (id, col) in live {
                bucket.push(id, col);
            }
            self.refresh(level);
        }
        true
    }

    /// Adds this structure's contribution to `out` (one entry per row slot).
    /// `values[id]` is the query coordinate for column `id`.
    pub(crate) fn query_into<T: Scalar>(
        &self,
        values: &[T],
        out: &mut [T],
        stats: &mut QueryStats,
    ) {
        let mut local = Vec::new();
        for bucket in &self.buckets {
            let Some(engine) = &bucket.engine else {
                continue;
            };
            if bucket.tombstones == bucket.stored() {
                continue;
            }
            local.clear();
            local.extend(bucket.ids.iter().zip(&bucket.dead).map(|(id, &dead)| {
                if dead {
                    T::zero()
                } else {
                    values[id.0 as usize]
                }
            }));
            let (partial, st) = engine.mv(&local).expect("bucket query dimensions agree");
            *stats += st;
            for (o, p) in out.iter_mut().zip(partial) {
                *o += p;
            }
        }
    }

    /// Live column words by id, for re-packing a stripe.
    pub(crate) fn live_columns(&self) -> impl Iterator<Item = (ColId, &[u64])> + '_ {
        self.buckets.iter().flat_map(|b| {
            b.ids
                .iter()
                .zip(&b.dead)
                .zip(&b.columns)
                .filter(|((_, dead), _)| !**dead)
                .map(|((&id, _), col)| (id, col.as_slice()))
        })
    }

    pub(crate) fn audit(&self) -> Result<(), String> {
        let mut live = 0;
        for (level, b) in self.buckets.iter().enumerate() {
            if b.stored() > capacity(level) {
                return Err(format!(
                    "bucket {level} stores {} > {}",
                    b.stored(),
                    capacity(level)
                ));
            }
            if b.tombstones > 0 && tombstones_full(level, b.tombstones) {
                return Err(format!("bucket {level} holds {} tombstones", b.tombstones));
            }
            let dead = b.dead.iter().filter(|&&d| d).count();
            if dead != b.tombstones {
                return Err(format!(
                    "bucket {level} tombstone count {} != {dead}",
                    b.tombstones
                ));
            }
            if b.dead.len() != b.stored() || b.columns.len() != b.stored() {
                return Err(format!("bucket {level} has ragged slot arrays"));
            }
            for (s, (&id, &d)) in b.ids.iter().zip(&b.dead).enumerate() {
                let mapped = self.slot.get(&id).copied();
                if d && mapped == Some((level, s)) {
                    return Err(format!("tombstoned column {id} is still indexed"));
                }
                if !d {
                    live += 1;
                    if mapped != Some((level, s)) {
                        return Err(format!(
                            "column {id} indexed at {mapped:?}, stored at ({level}, {s})"
                        ));
                    }
                }
            }
            match &b.engine {
                None if b.stored() > 0 => return Err(format!("bucket {level} has no engine")),
                Some(e) if *e.matrix() != b.assemble(self.rows) => {
                    return Err(format!("bucket {level} engine is stale"))
                }
                _ => {}
            }
        }
        if live != self.slot.len() {
            return Err(format!(
                "{live} live slots but {} indexed columns",
                self.slot.len()
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(bits: &[bool]) -> Vec<u64> {
        let mut w = vec![0u64; crate::bitmatrix::words_for(bits.len())];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                w[i / 64] |= 1 << (i % 64);
            }
        }
        w
    }

    fn sizes(cb: &ColBuckets) -> Vec<usize> {
        cb.buckets.iter().map(Bucket::stored).collect()
    }

    #[test]
    fn ceil_log2_values() {
        let expected = [0, 0, 1, 2, 2, 3, 3, 3, 3, 4];
        for (k, &e) in expected.iter().enumerate() {
            assert_eq!(ceil_log2(k), e, "k = {k}");
        }
    }

    #[test]
    fn binary_counter_cascade() {
        let mut cb = ColBuckets::new(2, Vec::new());
        cb.insert(ColId(0), col(&[true, false]));
        assert_eq!(sizes(&cb), vec![1]);
        cb.insert(ColId(1), col(&[false, true]));
        assert_eq!(sizes(&cb), vec![0, 2]);
        cb.insert(ColId(2), col(&[true, true]));
        assert_eq!(sizes(&cb), vec![1, 2]);
        cb.insert(ColId(3), col(&[false, false]));
        assert_eq!(sizes(&cb), vec![0, 0, 4]);
        cb.audit().unwrap();
    }

    #[test]
    fn tombstone_quota_purges() {
        let cols: Vec<_> = (0..8).map(|i| (ColId(i), col(&[i % 2 == 0]))).collect();
        let mut cb = ColBuckets::new(1, cols);
        assert_eq!(sizes(&cb), vec![0, 0, 0, 8]);
        for i in 0..3 {
            assert!(cb.delete(ColId(i)));
            assert_eq!(cb.buckets[3].tombstones, i as usize + 1);
            cb.audit().unwrap();
        }
        assert!(cb.delete(ColId(3)));
        assert_eq!(cb.buckets[3].stored(), 4);
        assert_eq!(cb.buckets[3].tombstones, 0);
        assert!(!cb.delete(ColId(3)));
        cb.audit().unwrap();
    }

    #[test]
    fn level_zero_deletes_immediately() {
        let mut cb = ColBuckets::new(1, Vec::new());
        cb.insert(ColId(5), col(&[true]));
        assert!(cb.delete(ColId(5)));
        assert_eq!(sizes(&cb), vec![0]);
        assert!(cb.buckets[0].engine.is_none());
        cb.audit().unwrap();
    }
}
