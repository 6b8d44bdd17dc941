//! Δ-labeled spanning trees over the columns of a Boolean matrix.
//!
//! Node `j < n` stands for column `j`; node `n` is a virtual all-zero column
//! and is always the root. The edge into node `x` from its parent `p` is
//! labeled with `M_x - M_p`, so summing labels along the root-to-`x` path
//! reconstructs column `x`.

use std::io::Write;

use rayon::prelude::*;

use crate::bitmatrix::{hamming_words, BitMatrix, SparseDelta};
use crate::error::{check_len, OmvError, Result};

/// Minimum column count before Prim's distance updates go parallel.
const PAR_THRESHOLD: usize = 512;

#[derive(Clone, Debug)]
pub struct DeltaTree {
    dim: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    labels: Vec<SparseDelta>,
    weight: usize,
    preorder: Vec<usize>,
}

impl DeltaTree {
    /// Builds a tree from an explicit parent map over the columns of
    /// `source` plus the virtual root (index `source.cols()`). Labels are
    /// computed from the source columns.
    pub fn from_parents(source: &BitMatrix, parent: Vec<Option<usize>>) -> Result<Self> {
        let n = source.cols();
        let root = n;
        check_len(n + 1, parent.len())?;
        if parent[root].is_some() {
            return Err(OmvError::InvalidInput(
                "virtual root must have no parent".into(),
            ));
        }
        let mut children = vec![Vec::new(); n + 1];
        for (x, p) in parent.iter().enumerate() {
            match *p {
                None if x != root => {
                    return Err(OmvError::InvalidInput(format!("node {x} has no parent")))
                }
                Some(p) if p > n || p == x => {
                    return Err(OmvError::InvalidInput(format!(
                        "node {x} has invalid parent {p}"
                    )))
                }
                Some(p) => children[p].push(x),
                None => {}
            }
        }

        let mut preorder = Vec::with_capacity(n + 1);
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            preorder.push(x);
            stack.extend(children[x].iter().rev());
        }
        if preorder.len() != n + 1 {
            return Err(OmvError::InvalidInput(
                "parent map does not form a tree rooted at the virtual root".into(),
            ));
        }

        let zero = vec![0u64; source.words_per_col()];
        let words = |x: usize| {
            if x == root {
                zero.as_slice()
            } else {
                source.col_words(x)
            }
        };
        let labels: Vec<SparseDelta> = (0..=n)
            .map(|x| match parent[x] {
                None => SparseDelta::default(),
                Some(p) => SparseDelta::between(words(p), words(x)),
            })
            .collect();
        let weight = labels.iter().map(SparseDelta::len).sum();

        Ok(DeltaTree {
            dim: source.rows(),
            parent,
            children,
            labels,
            weight,
            preorder,
        })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    /// Number of real (non-root) nodes.
    #[inline]
    pub fn column_count(&self) -> usize {
        self.parent.len() - 1
    }

    #[inline]
    pub fn root(&self) -> usize {
        self.parent.len() - 1
    }

    /// Length of the label vectors (rows of the source matrix).
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn parent(&self, x: usize) -> Option<usize> {
        self.parent[x]
    }

    #[inline]
    pub fn children(&self, x: usize) -> &[usize] {
        &self.children[x]
    }

    /// Label of the edge entering `x` (empty for the root).
    #[inline]
    pub fn label(&self, x: usize) -> &SparseDelta {
        &self.labels[x]
    }

    /// Total nonzero count over all edge labels.
    #[inline]
    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn recount_weight(&self) -> usize {
        self.labels.iter().map(SparseDelta::len).sum()
    }

    /// Nodes in DFS preorder from the root; parents precede children.
    #[inline]
    pub fn preorder(&self) -> &[usize] {
        &self.preorder
    }

    /// Nodes on the path from the root to `x`, inclusive.
    pub fn path_to(&self, x: usize) -> Vec<usize> {
        let mut path = vec![x];
        let mut cur = x;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Sums labels along the root-to-`x` path.
    pub fn reconstruct(&self, x: usize) -> Result<Vec<bool>> {
        let mut bits = vec![false; self.dim];
        for node in self.path_to(x) {
            self.labels[node].apply(&mut bits)?;
        }
        Ok(bits)
    }

    pub fn is_path(&self) -> bool {
        self.children.iter().all(|c| c.len() <= 1)
    }

    /// Debug dump: header `%%OMV dtree <node_count> <weight>`, then
    /// `<id> <parent|-> <label nnz>` per node.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%OMV dtree {} {}", self.node_count(), self.weight)?;
        for x in 0..self.node_count() {
            match self.parent[x] {
                Some(p) => writeln!(w, "{x} {p} {}", self.labels[x].len())?,
                None => writeln!(w, "{x} - 0")?,
            }
        }
        Ok(())
    }
}

/// Exact minimum spanning tree of the complete Hamming graph on the columns
/// of `m` (Prim, O(n^2) distance evaluations), with the virtual zero root
/// attached to a column of minimum weight.
///
/// Ties go to the smallest column index, so the tree is deterministic.
pub fn build_mst(m: &BitMatrix) -> DeltaTree {
    let n = m.cols();
    let root = n;
    let mut parent = vec![None; n + 1];
    if n > 0 {
        let cols: Vec<&[u64]> = (0..n).map(|j| m.col_words(j)).collect();
        let start = (0..n).min_by_key(|&j| (m.col_weight(j), j)).unwrap();
        parent[start] = Some(root);

        let mut in_tree = vec![false; n];
        let mut dist = vec![usize::MAX; n];
        let mut from = vec![start; n];
        let mut next = start;
        for _ in 0..n {
            in_tree[next] = true;
            let src = cols[next];
            let relax = |(j, (d, f)): (usize, (&mut usize, &mut usize))| {
                if !in_tree[j] {
                    let h = hamming_words(src, cols[j]);
                    if h < *d {
                        *d = h;
                        *f = next;
                    }
                }
            };
            if n >= PAR_THRESHOLD {
                dist.par_iter_mut()
                    .zip(from.par_iter_mut())
                    .enumerate()
                    .for_each(relax);
            } else {
                dist.iter_mut()
                    .zip(from.iter_mut())
                    .enumerate()
                    .for_each(relax);
            }
            let mut best: Option<usize> = None;
            for j in 0..n {
                if !in_tree[j] && best.is_none_or(|b| dist[j] < dist[b]) {
                    best = Some(j);
                }
            }
            match best {
                Some(j) => {
                    parent[j] = Some(from[j]);
                    next = j;
                }
                None => break,
            }
        }
    }
    DeltaTree::from_parents(m, parent).expect("Prim output is a spanning tree")
}

/// Re-links the columns of `tree` into a path in DFS preorder, relabeling
/// each path edge from `source`.
pub fn linearize(tree: &DeltaTree, source: &BitMatrix) -> Result<DeltaTree> {
    check_len(tree.column_count(), source.cols())?;
    check_len(tree.dim(), source.rows())?;
    let order = tree.preorder();
    let mut parent = vec![None; order.len()];
    for pair in order.windows(2) {
        parent[pair[1]] = Some(pair[0]);
    }
    DeltaTree::from_parents(source, parent)
}
