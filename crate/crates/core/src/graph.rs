//! Dynamic undirected graphs on top of [`DynOmv`]: triangle detection,
//! Laplacian products and hop-bounded distances.
//!
//! Vertices carry stable ids. Vectors passed in and out are indexed by
//! increasing vertex id. Internally a vertex update replaces the vertex's
//! row and column, so the engine ids behind a vertex change over time.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::io::BufRead;

use crate::bitmatrix::io::parse_header;
use crate::bitmatrix::BitMatrix;
use crate::dynamic::{ColId, DynOmv, RowId};
use crate::error::{check_len, OmvError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub u64);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug)]
pub struct DynGraph {
    adj: DynOmv,
    nbrs: BTreeMap<VertexId, BTreeSet<VertexId>>,
    deg: BTreeMap<VertexId, usize>,
    /// Engine id (shared by the row and the column) per vertex.
    slot: BTreeMap<VertexId, u64>,
    owner: BTreeMap<u64, VertexId>,
    next_vertex: u64,
    tri_trace: i64,
}

impl DynGraph {
    /// Graph on vertices `0..n` with the given undirected edges.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut nbrs: BTreeMap<VertexId, BTreeSet<VertexId>> = (0..n as u64)
            .map(|i| (VertexId(i), BTreeSet::new()))
            .collect();
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(OmvError::IndexOutOfRange { index: x, limit: n });
                }
            }
            if u == v {
                return Err(OmvError::InvalidInput(format!("self-loop at {u}")));
            }
            let (a, b) = (VertexId(u as u64), VertexId(v as u64));
            if !nbrs.get_mut(&a).expect("in range").insert(b) {
                return Err(OmvError::InvalidInput(format!("duplicate edge {u} {v}")));
            }
            nbrs.get_mut(&b).expect("in range").insert(a);
        }
        let m = BitMatrix::from_fn(n, n, |i, j| {
            nbrs[&VertexId(i as u64)].contains(&VertexId(j as u64))
        });
        let tri_trace = Self::count_trace(&m);
        Ok(DynGraph {
            adj: DynOmv::new(&m),
            deg: nbrs.iter().map(|(&v, s)| (v, s.len())).collect(),
            nbrs,
            slot: (0..n as u64).map(|i| (VertexId(i), i)).collect(),
            owner: (0..n as u64).map(|i| (i, VertexId(i))).collect(),
            next_vertex: n as u64,
            tri_trace,
        })
    }

    /// `trace(A³)`: sum over ordered edges of common-neighbor counts.
    fn count_trace(m: &BitMatrix) -> i64 {
        let mut s = 0i64;
        for i in 0..m.rows() {
            let ri = m.row_words(i);
            for j in m.row_ones(i) {
                let rj = m.row_words(j);
                s += ri
                    .iter()
                    .zip(rj)
                    .map(|(a, b)| (a & b).count_ones() as i64)
                    .sum::<i64>();
            }
        }
        s
    }

    /// `%%OMV graph <n> <m_edges>` then one `u v` pair per line.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
        let Some((lineno, header)) = lines.next() else {
            return Err(OmvError::parse(1, "empty input"));
        };
        let dims = parse_header(&header?, lineno, "graph")?;
        let &[n, m] = dims.as_slice() else {
            return Err(OmvError::parse(
                lineno,
                "header needs exactly <n> <m_edges>",
            ));
        };
        let mut edges = Vec::with_capacity(m);
        let mut seen = BTreeSet::new();
        for (lineno, line) in lines {
            let line = line?;
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.is_empty() {
                continue;
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| OmvError::parse(lineno, format!("bad vertex `{s}`")))
            };
            let [a, b] = t.as_slice() else {
                return Err(OmvError::parse(lineno, "expected `u v`"));
            };
            let (u, v) = (parse(a)?, parse(b)?);
            if u >= n || v >= n {
                return Err(OmvError::parse(
                    lineno,
                    format!("vertex out of range for n = {n}"),
                ));
            }
            if u == v {
                return Err(OmvError::parse(lineno, "self-loop"));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(OmvError::parse(lineno, "duplicate edge"));
            }
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(OmvError::InvalidInput(format!(
                "header declares {m} edges, found {}",
                edges.len()
            )));
        }
        Self::new(n, &edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.nbrs.len()
    }

    pub fn edge_count(&self) -> usize {
        self.deg.values().sum::<usize>() / 2
    }

    pub fn vertices(&self) -> Vec<VertexId> {
        self.nbrs.keys().copied().collect()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.nbrs.contains_key(&v)
    }

    pub fn neighbors(&self, v: VertexId) -> Result<&BTreeSet<VertexId>> {
        self.nbrs.get(&v).ok_or(OmvError::UnknownId(v.0))
    }

    pub fn degree(&self, v: VertexId) -> Result<usize> {
        self.deg.get(&v).copied().ok_or(OmvError::UnknownId(v.0))
    }

    /// Degrees in vertex-id order.
    pub fn degrees(&self) -> Vec<usize> {
        self.deg.values().copied().collect()
    }

    /// Undirected edges as vertex-order positions `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let pos: BTreeMap<VertexId, usize> =
            self.nbrs.keys().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, (_, ns)) in self.nbrs.iter().enumerate() {
            for w in ns {
                let j = pos[w];
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// `trace(A³)`, six times the triangle count.
    pub fn triangle_trace(&self) -> i64 {
        self.tri_trace
    }

    pub fn triangle_count(&self) -> i64 {
        self.tri_trace / 6
    }

    pub fn has_triangle(&self) -> bool {
        self.tri_trace > 0
    }

    pub fn adjacency(&self) -> BitMatrix {
        let vs = self.vertices();
        BitMatrix::from_fn(vs.len(), vs.len(), |i, j| {
            self.nbrs[&vs[i]].contains(&vs[j])
        })
    }

    /// Connected components as lists of vertex-order positions.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let vs = self.vertices();
        let pos: BTreeMap<VertexId, usize> = vs.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut seen = vec![false; vs.len()];
        let mut out = Vec::new();
        for start in 0..vs.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for w in &self.nbrs[&vs[x]] {
                    let y = pos[w];
                    if !seen[y] {
                        seen[y] = true;
                        comp.push(y);
                        queue.push_back(y);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Engine-order ↔ vertex-order permutation: `perm[p]` is the vertex
    /// position of the engine's `p`-th live row/column.
    fn engine_perm(&self) -> Vec<usize> {
        let pos: BTreeMap<VertexId, usize> =
            self.nbrs.keys().enumerate().map(|(i, &v)| (v, i)).collect();
        self.owner.values().map(|v| pos[v]).collect()
    }

    /// `A·x` with `x` in vertex order.
    pub fn adjacency_mv<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        check_len(self.vertex_count(), x.len())?;
        let perm = self.engine_perm();
        let v: Vec<T> = perm.iter().map(|&q| x[q]).collect();
        let y = self.adj.query(&v)?;
        let mut out = vec![T::zero(); y.len()];
        for (&q, yv) in perm.iter().zip(y) {
            out[q] = yv;
        }
        Ok(out)
    }

    /// `a^T A a` on the current engine contents, `a` the indicator of `set`.
    fn closed_walks(&self, set: &BTreeSet<VertexId>) -> Result<i64> {
        let a: Vec<i64> = self
            .owner
            .values()
            .map(|v| set.contains(v) as i64)
            .collect();
        let y = self.adj.query(&a)?;
        Ok(a.iter().zip(y).map(|(x, y)| x * y).sum())
    }

    fn validate(&self, v: VertexId, nbrs: &BTreeSet<VertexId>) -> Result<()> {
        if !self.contains(v) {
            return Err(OmvError::UnknownId(v.0));
        }
        if nbrs.contains(&v) {
            return Err(OmvError::InvalidInput(format!("self-loop at vertex {v}")));
        }
        if let Some(w) = nbrs.iter().find(|w| !self.contains(**w)) {
            return Err(OmvError::UnknownId(w.0));
        }
        Ok(())
    }

    /// Replaces the neighborhood of `v`, keeping the triangle trace current.
    pub fn vertex_update(&mut self, v: VertexId, nbrs: &[VertexId]) -> Result<()> {
        let new: BTreeSet<VertexId> = nbrs.iter().copied().collect();
        self.validate(v, &new)?;
        let old = self.nbrs[&v].clone();

        let engine_id = self.owner_remove(v);
        self.adj.delete_row(RowId(engine_id))?;
        self.adj.delete_col(ColId(engine_id))?;
        let t_old = self.closed_walks(&old)?;
        let t_new = self.closed_walks(&new)?;

        let col_bits: Vec<bool> = self.owner.values().map(|w| new.contains(w)).collect();
        let c = self.adj.insert_col(&col_bits)?;
        let mut row_bits = col_bits;
        row_bits.push(false);
        let r = self.adj.insert_row(&row_bits)?;
        debug_assert_eq!(c.0, r.0, "row and column ids move in lockstep");
        self.slot.insert(v, c.0);
        self.owner.insert(c.0, v);

        self.tri_trace += 3 * (t_new - t_old);
        for w in old.difference(&new) {
            self.nbrs.get_mut(w).expect("live").remove(&v);
            *self.deg.get_mut(w).expect("live") -= 1;
        }
        for w in new.difference(&old) {
            self.nbrs.get_mut(w).expect("live").insert(v);
            *self.deg.get_mut(w).expect("live") += 1;
        }
        self.deg.insert(v, new.len());
        self.nbrs.insert(v, new);
        Ok(())
    }

    fn owner_remove(&mut self, v: VertexId) -> u64 {
        let id = self.slot.remove(&v).expect("live vertex has a slot");
        self.owner.remove(&id);
        id
    }

    /// Adds a vertex adjacent to `nbrs`.
    pub fn insert_vertex(&mut self, nbrs: &[VertexId]) -> Result<VertexId> {
        if let Some(w) = nbrs.iter().find(|w| !self.contains(**w)) {
            return Err(OmvError::UnknownId(w.0));
        }
        let v = VertexId(self.next_vertex);
        self.next_vertex += 1;
        let c = self.adj.insert_col(&vec![false; self.adj.rows()])?;
        let r = self.adj.insert_row(&vec![false; self.adj.cols()])?;
        debug_assert_eq!(c.0, r.0);
        self.slot.insert(v, c.0);
        self.owner.insert(c.0, v);
        self.nbrs.insert(v, BTreeSet::new());
        self.deg.insert(v, 0);
        self.vertex_update(v, nbrs)?;
        Ok(v)
    }

    pub fn delete_vertex(&mut self, v: VertexId) -> Result<()> {
        self.vertex_update(v, &[])?;
        let id = self.owner_remove(v);
        self.adj.delete_row(RowId(id))?;
        self.adj.delete_col(ColId(id))?;
        self.nbrs.remove(&v);
        self.deg.remove(&v);
        Ok(())
    }

    /// Hop distances from `u` up to `dmax`, in vertex order; `None` beyond.
    pub fn bounded_sssp(&self, u: VertexId, dmax: usize) -> Result<Vec<Option<u32>>> {
        if !self.contains(u) {
            return Err(OmvError::UnknownId(u.0));
        }
        let n = self.vertex_count();
        let src = self.nbrs.keys().position(|&v| v == u).expect("live");
        let mut dist = vec![None; n];
        dist[src] = Some(0);
        let mut w = vec![0i64; n];
        w[src] = 1;
        for round in 1..=dmax.min(n) {
            let reach = self.adjacency_mv(&w)?;
            let mut grew = false;
            for (i, r) in reach.into_iter().enumerate() {
                if r > 0 && w[i] == 0 {
                    w[i] = 1;
                    dist[i] = Some(round as u32);
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        Ok(dist)
    }

    /// `(D − A)x`.
    pub fn laplacian_mv<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        let ax = self.adjacency_mv(x)?;
        Ok(self
            .deg
            .values()
            .zip(x)
            .zip(ax)
            .map(|((&d, &xi), a)| {
                <T as num_traits::NumCast>::from(d).expect("degree fits") * xi - a
            })
            .collect())
    }

    /// `D^{-1/2}(Dw − Aw)` with `w = D^{-1/2}x`, taking `D^{-1/2}_{ii} = 0`
    /// for isolated vertices. Equals `(I − D^{-1/2} A D^{-1/2})x` elsewhere.
    pub fn normalized_laplacian_mv(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.vertex_count(), x.len())?;
        let inv_sqrt: Vec<f64> = self
            .deg
            .values()
            .map(|&d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
            .collect();
        let w: Vec<f64> = x.iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect();
        let lw = self.laplacian_mv(&w)?;
        Ok(lw.iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect())
    }

    /// Checks symmetry, the zero diagonal, degrees, the triangle trace and
    /// the engine's own invariants.
    pub fn audit(&self) -> std::result::Result<(), String> {
        self.adj.audit()?;
        let a = self.adjacency();
        let vs = self.vertices();
        let perm = self.engine_perm();
        let engine = self.adj.to_matrix();
        for (p, &q) in perm.iter().enumerate() {
            for (p2, &q2) in perm.iter().enumerate() {
                if engine.get(p, p2) != a.get(q, q2) {
                    return Err(format!("engine entry ({}, {}) disagrees", vs[q], vs[q2]));
                }
            }
        }
        if a != a.transpose() {
            return Err("adjacency is not symmetric".into());
        }
        if (0..a.rows()).any(|i| a.get(i, i)) {
            return Err("nonzero diagonal".into());
        }
        for (i, v) in vs.iter().enumerate() {
            if self.deg[v] != a.row_ones(i).count() {
                return Err(format!("degree of {v} is stale"));
            }
        }
        let s = Self::count_trace(&a);
        if s != self.tri_trace || s % 6 != 0 {
            return Err(format!(
                "triangle trace {} but recount gives {s}",
                self.tri_trace
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

    fn brute_triangles(a: &BitMatrix) -> i64 {
        let n = a.rows();
        let mut t = 0;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    if a.get(i, j) && a.get(j, k) && a.get(i, k) {
                        t += 1;
                    }
                }
            }
        }
        t
    }

    fn bfs(a: &BitMatrix, s: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; a.rows()];
        dist[s] = Some(0);
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for y in a.row_ones(x) {
                if dist[y].is_none() {
                    dist[y] = Some(dist[x].unwrap() + 1);
                    q.push_back(y);
                }
            }
        }
        dist
    }

    fn gnp(rng: &mut impl Rng, n: usize, p: f64) -> DynGraph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        DynGraph::new(n, &edges).unwrap()
    }

    fn v(i: u64) -> VertexId {
        VertexId(i)
    }

    #[test]
    fn build_k3_by_updates() {
        let mut g = DynGraph::new(3, &[]).unwrap();
        assert!(!g.has_triangle());
        g.vertex_update(v(0), &[v(1), v(2)]).unwrap();
        assert_eq!(g.triangle_trace(), 0);
        g.vertex_update(v(1), &[v(0), v(2)]).unwrap();
        assert_eq!(g.triangle_trace(), 6);
        assert!(g.has_triangle());
        g.audit().unwrap();
        g.vertex_update(v(2), &[]).unwrap();
        assert_eq!(g.triangle_trace(), 0);
        g.audit().unwrap();
    }

    #[test]
    fn update_errors() {
        let mut g = DynGraph::new(3, &[(0, 1)]).unwrap();
        assert!(matches!(
            g.vertex_update(v(0), &[v(0)]),
            Err(OmvError::InvalidInput(_))
        ));
        assert!(matches!(
            g.vertex_update(v(7), &[]),
            Err(OmvError::UnknownId(7))
        ));
        assert!(matches!(
            g.vertex_update(v(0), &[v(9)]),
            Err(OmvError::UnknownId(9))
        ));
        assert!(DynGraph::new(2, &[(0, 0)]).is_err());
        assert!(DynGraph::new(2, &[(0, 1), (1, 0)]).is_err());
        assert!(DynGraph::new(2, &[(0, 2)]).is_err());
        g.audit().unwrap();
    }

    #[test]
    fn random_updates_track_triangles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut g = gnp(&mut rng, 24, 0.2);
        assert_eq!(g.triangle_trace(), 6 * brute_triangles(&g.adjacency()));
        for _ in 0..60 {
            let vs = g.vertices();
            let x = vs[rng.random_range(0..vs.len())];
            let nb: Vec<VertexId> = vs
                .iter()
                .copied()
                .filter(|&w| w != x && rng.random_bool(0.25))
                .collect();
            g.vertex_update(x, &nb).unwrap();
            assert_eq!(g.triangle_trace(), 6 * brute_triangles(&g.adjacency()));
        }
        g.audit().unwrap();
    }

    #[test]
    fn insert_and_delete_vertices() {
        let mut g = DynGraph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let iso = g.insert_vertex(&[]).unwrap();
        assert_eq!(g.triangle_trace(), 6);
        let pendant = g.insert_vertex(&[v(0)]).unwrap();
        assert_eq!(g.triangle_trace(), 6);
        g.delete_vertex(pendant).unwrap();
        g.delete_vertex(iso).unwrap();
        assert_eq!(g.triangle_trace(), 6);
        let apex = g.insert_vertex(&[v(0), v(1)]).unwrap();
        assert_eq!(g.triangle_count(), 2);
        g.delete_vertex(v(2)).unwrap();
        assert_eq!(g.triangle_count(), 1);
        assert_eq!(g.vertices(), vec![v(0), v(1), apex]);
        g.audit().unwrap();
        assert!(g.vertex_update(v(2), &[]).is_err());
    }

    #[test]
    fn sssp_path_and_bfs() {
        let g = DynGraph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let d = g.bounded_sssp(v(0), 4).unwrap();
        assert_eq!(d, vec![Some(0), Some(1), Some(2), Some(3), Some(4)]);
        let d = g.bounded_sssp(v(0), 2).unwrap();
        assert_eq!(d, vec![Some(0), Some(1), Some(2), None, None]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let g = gnp(&mut rng, 40, 0.06);
            let a = g.adjacency();
            for s in [0, 17, 39] {
                assert_eq!(g.bounded_sssp(v(s as u64), 39).unwrap(), bfs(&a, s));
            }
        }
    }

    #[test]
    fn laplacian_products() {
        let g = DynGraph::new(3, &[(0, 1)]).unwrap();
        assert_eq!(g.laplacian_mv(&[1i64, 0, 0]).unwrap(), vec![1, -1, 0]);
        assert_eq!(g.laplacian_mv(&[1i64, 1, 1]).unwrap(), vec![0, 0, 0]);
        let n = g.normalized_laplacian_mv(&[1.0, 0.0, 5.0]).unwrap();
        assert_eq!(n, vec![1.0, -1.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = gnp(&mut rng, 30, 0.2);
        let a = g.adjacency();
        let x: Vec<i64> = (0..30).map(|_| rng.random_range(-5..=5)).collect();
        let lx = g.laplacian_mv(&x).unwrap();
        let ax = a.naive_mv(&x).unwrap();
        for i in 0..30 {
            assert_eq!(lx[i], g.degrees()[i] as i64 * x[i] - ax[i]);
        }
        assert_eq!(lx.iter().sum::<i64>(), 0);
    }

    #[test]
    fn reads_graph_files() {
        let g = DynGraph::read("%%OMV graph 3 2\n0 1\n1 2\n".as_bytes()).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
        for (text, line) in [
            ("%%OMV graph 3 1\n0 0\n", 2),
            ("%%OMV graph 3 2\n0 1\n1 0\n", 3),
            ("%%OMV graph 3 1\n0 5\n", 2),
            ("%%OMV graph 3\n", 1),
            ("%%OMV graph 3 1\n0 x\n", 2),
        ] {
            match DynGraph::read(text.as_bytes()) {
                Err(OmvError::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(DynGraph::read("%%OMV graph 3 2\n0 1\n".as_bytes()).is_err());
    }
}
