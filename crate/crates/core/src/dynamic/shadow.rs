//! Plain id-keyed matrix used as an independent oracle for [`DynOmv`](super::DynOmv).

use std::collections::BTreeMap;

use super::{ColId, RowId};
use crate::bitmatrix::BitMatrix;
use crate::error::{check_len, OmvError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Default)]
pub struct ShadowMatrix {
    rows: BTreeMap<RowId, BTreeMap<ColId, bool>>,
    cols: Vec<ColId>,
    next_row: u64,
    next_col: u64,
}

impl ShadowMatrix {
    pub fn new(m: &BitMatrix) -> Self {
        let cols: Vec<ColId> = (0..m.cols() as u64).map(ColId).collect();
        let rows = (0..m.rows())
            .map(|i| {
                let row = cols
                    .iter()
                    .enumerate()
                    .map(|(j, &c)| (c, m.get(i, j)))
                    .collect();
                (RowId(i as u64), row)
            })
            .collect();
        ShadowMatrix {
            rows,
            cols,
            next_row: m.rows() as u64,
            next_col: m.cols() as u64,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols.len()
    }

    pub fn insert_row(&mut self, bits: &[bool]) -> Result<RowId> {
        check_len(self.cols(), bits.len())?;
        let id = RowId(self.next_row);
        self.next_row += 1;
        self.rows.insert(
            id,
            self.cols
                .iter()
                .copied()
                .zip(bits.iter().copied())
                .collect(),
        );
        Ok(id)
    }

    pub fn insert_col(&mut self, bits: &[bool]) -> Result<ColId> {
        check_len(self.rows(), bits.len())?;
        let id = ColId(self.next_col);
        self.next_col += 1;
        self.cols.push(id);
        for (row, &b) in self.rows.values_mut().zip(bits) {
            row.insert(id, b);
        }
        Ok(id)
    }

    pub fn delete_row(&mut self, id: RowId) -> Result<()> {
        self.rows
            .remove(&id)
            .map(|_| ())
            .ok_or(OmvError::UnknownId(id.0))
    }

    pub fn delete_col(&mut self, id: ColId) -> Result<()> {
        let pos = self
            .cols
            .iter()
            .position(|&c| c == id)
            .ok_or(OmvError::UnknownId(id.0))?;
        self.cols.remove(pos);
        for row in self.rows.values_mut() {
            row.remove(&id);
        }
        Ok(())
    }

    pub fn to_matrix(&self) -> BitMatrix {
        let rows: Vec<_> = self.rows.values().collect();
        BitMatrix::from_fn(rows.len(), self.cols.len(), |i, j| rows[i][&self.cols[j]])
    }

    pub fn mv<T: Scalar>(&self, v: &[T]) -> Result<Vec<T>> {
        check_len(self.cols(), v.len())?;
        Ok(self
            .rows
            .values()
            .map(|row| {
                row.values()
                    .zip(v)
                    .filter(|(&b, _)| b)
                    .fold(T::zero(), |acc, (_, &x)| acc + x)
            })
            .collect())
    }
}
