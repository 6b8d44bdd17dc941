//! Laplacian solver: Richardson iteration preconditioned by a spectral
//! sparsifier, with Laplacian products served by the OMv engine.
//!
//! The sparsifier `H` is rebuilt from scratch by effective-resistance
//! sampling every `refresh_period` vertex updates (and whenever the vertex
//! set changes). `H^{-1}` is applied approximately by Jacobi-preconditioned
//! conjugate gradient.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, OmvError, Result};
use crate::graph::{DynGraph, VertexId};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Vertex updates between sparsifier rebuilds; `None` means `⌈n/4⌉`.
    pub refresh_period: Option<usize>,
    /// Relative residual for the inner conjugate-gradient solve.
    pub inner_tol: f64,
    /// Assumed per-iteration contraction of the energy-norm error.
    pub rho: f64,
    /// Oversampling constant `C` in `q = ⌈C·n·ln²n⌉`.
    pub oversampling: f64,
    pub probes: usize,
    pub max_retries: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            refresh_period: None,
            inner_tol: 0.25,
            rho: 2.0 / 3.0,
            oversampling: 8.0,
            probes: 100,
            max_retries: 3,
            seed: 0,
        }
    }
}

/// Weighted sparsifier edges by vertex id.
#[derive(Clone, Debug, Default)]
pub struct Sparsifier {
    pub edges: Vec<(VertexId, VertexId, f64)>,
    /// True when `H = G` (all edges kept with unit weight).
    pub exact: bool,
    /// Draws used by the accepted sample (0 when exact by construction).
    pub draws: usize,
    pub attempts: usize,
}

#[derive(Clone, Debug)]
pub struct SolverState {
    graph: DynGraph,
    config: SolverConfig,
    sparsifier: Sparsifier,
    updates_since_refresh: usize,
    refreshes: usize,
    rng: ChaCha8Rng,
}

/// Component projector applied in place: subtract each component's mean.
fn project(x: &mut [f64], comps: &[Vec<usize>]) {
    for c in comps {
        let mean = c.iter().map(|&i| x[i]).sum::<f64>() / c.len() as f64;
        for &i in c {
            x[i] -= mean;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quad_form(edges: &[(usize, usize, f64)], x: &[f64]) -> f64 {
    edges
        .iter()
        .map(|&(u, v, w)| w * (x[u] - x[v]).powi(2))
        .sum()
}

/// Dense `L^+` via `(L + P)^{-1} − P`, `P` the component projector.
pub fn dense_pinv(n: usize, edges: &[(usize, usize, f64)], comps: &[Vec<usize>]) -> DMatrix<f64> {
    let mut l = DMatrix::<f64>::zeros(n, n);
    for &(u, v, w) in edges {
        l[(u, u)] += w;
        l[(v, v)] += w;
        l[(u, v)] -= w;
        l[(v, u)] -= w;
    }
    let mut p = DMatrix::<f64>::zeros(n, n);
    for c in comps {
        let s = 1.0 / c.len() as f64;
        for &i in c {
            for &j in c {
                p[(i, j)] = s;
            }
        }
    }
    let inv = (l + &p)
        .cholesky()
        .expect("L + P is positive definite")
        .inverse();
    inv - p
}

/// `L^+ b` for the unit-weight Laplacian of `g`, by dense factorization.
pub fn dense_solve(g: &DynGraph, b: &[f64]) -> Result<Vec<f64>> {
    check_len(g.vertex_count(), b.len())?;
    let edges: Vec<_> = g.edges().into_iter().map(|(u, v)| (u, v, 1.0)).collect();
    let pinv = dense_pinv(g.vertex_count(), &edges, &g.components());
    Ok((pinv * nalgebra::DVector::from_column_slice(b))
        .as_slice()
        .to_vec())
}

/// `‖x‖_L` for the unit-weight Laplacian of `g`.
pub fn energy_norm(g: &DynGraph, x: &[f64]) -> f64 {
    let edges: Vec<_> = g.edges().into_iter().map(|(u, v)| (u, v, 1.0)).collect();
    quad_form(&edges, x).max(0.0).sqrt()
}

/// Weighted Laplacian in adjacency form, for the inner solver.
struct WeightedLaplacian {
    adj: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl WeightedLaplacian {
    fn new(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        let mut diag = vec![0.0; n];
        for &(u, v, w) in edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
            diag[u] += w;
            diag[v] += w;
        }
        WeightedLaplacian { adj, diag }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.diag[i] * x[i] - self.adj[i].iter().map(|&(j, w)| w * x[j]).sum::<f64>();
        }
    }

    /// Jacobi-preconditioned CG to relative residual `tol`.
    fn solve(&self, b: &[f64], tol: f64, comps: &[Vec<usize>]) -> Vec<f64> {
        let n = b.len();
        let mut rhs = b.to_vec();
        project(&mut rhs, comps);
        let mut x = vec![0.0; n];
        let norm_b = dot(&rhs, &rhs).sqrt();
        if norm_b == 0.0 {
            return x;
        }
        let inv_diag: Vec<f64> = self
            .diag
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 })
            .collect();
        let mut r = rhs;
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        for _ in 0..(10 * n + 100) {
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if dot(&r, &r).sqrt() <= tol * norm_b {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        project(&mut x, comps);
        x
    }
}

fn is_connected(n: usize, edges: &[(usize, usize, f64)]) -> bool {
    if n == 0 {
        return true;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut sets = n;
    for &(u, v, _) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            sets -= 1;
        }
    }
    sets == 1
}

impl SolverState {
    pub fn new(graph: DynGraph, config: SolverConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut s = SolverState {
            graph,
            config,
            sparsifier: Sparsifier::default(),
            updates_since_refresh: 0,
            refreshes: 0,
            rng,
        };
        s.refresh_sparsifier();
        s
    }

    pub fn graph(&self) -> &DynGraph {
        &self.graph
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn sparsifier(&self) -> &Sparsifier {
        &self.sparsifier
    }

    pub fn refresh_count(&self) -> usize {
        self.refreshes
    }

    pub fn updates_since_refresh(&self) -> usize {
        self.updates_since_refresh
    }

    pub fn refresh_period(&self) -> usize {
        self.config
            .refresh_period
            .unwrap_or_else(|| self.graph.vertex_count().div_ceil(4))
            .max(1)
    }

    /// Draw count `q = ⌈C·n·ln²n⌉`.
    pub fn sample_budget(&self) -> usize {
        let n = self.graph.vertex_count().max(2) as f64;
        (self.config.oversampling * n * n.ln().powi(2)).ceil() as usize
    }

    pub fn vertex_update(&mut self, v: VertexId, nbrs: &[VertexId]) -> Result<()> {
        self.graph.vertex_update(v, nbrs)?;
        self.updates_since_refresh += 1;
        if self.updates_since_refresh >= self.refresh_period() {
            self.refresh_sparsifier();
        }
        Ok(())
    }

    pub fn insert_vertex(&mut self, nbrs: &[VertexId]) -> Result<VertexId> {
        let v = self.graph.insert_vertex(nbrs)?;
        self.refresh_sparsifier();
        Ok(v)
    }

    pub fn delete_vertex(&mut self, v: VertexId) -> Result<()> {
        self.graph.delete_vertex(v)?;
        self.refresh_sparsifier();
        Ok(())
    }

    /// Rebuilds `H` by effective-resistance sampling. Edges with resistance
    /// one (bridges) are always kept; the rest are drawn with probability
    /// proportional to their resistance. Falls back to `H = G` if the probe
    /// check keeps failing.
    pub fn refresh_sparsifier(&mut self) {
        self.refreshes += 1;
        self.updates_since_refresh = 0;
        let vs = self.graph.vertices();
        let n = vs.len();
        let edges: Vec<(usize, usize, f64)> = self
            .graph
            .edges()
            .into_iter()
            .map(|(u, v)| (u, v, 1.0))
            .collect();
        let exact = |attempts| Sparsifier {
            edges: edges.iter().map(|&(u, v, w)| (vs[u], vs[v], w)).collect(),
            exact: true,
            draws: 0,
            attempts,
        };
        if edges.is_empty() {
            self.sparsifier = exact(0);
            return;
        }
        let comps = self.graph.components();
        let pinv = dense_pinv(n, &edges, &comps);
        let resist: Vec<f64> = edges
            .iter()
            .map(|&(u, v, _)| pinv[(u, u)] + pinv[(v, v)] - 2.0 * pinv[(u, v)])
            .collect();
        let (bridges, rest): (Vec<usize>, Vec<usize>) =
            (0..edges.len()).partition(|&e| resist[e] >= 1.0 - 1e-9);
        if rest.is_empty() {
            self.sparsifier = exact(0);
            return;
        }
        let dist = WeightedIndex::new(rest.iter().map(|&e| resist[e].max(1e-12)))
            .expect("positive resistances");
        let total: f64 = rest.iter().map(|&e| resist[e].max(1e-12)).sum();
        let mut q = self.sample_budget();
        for attempt in 1..=self.config.max_retries + 1 {
            let mut weight: BTreeMap<usize, f64> = bridges.iter().map(|&e| (e, 1.0)).collect();
            for _ in 0..q {
                let e = rest[dist.sample(&mut self.rng)];
                let p = resist[e].max(1e-12) / total;
                *weight.entry(e).or_insert(0.0) += 1.0 / (q as f64 * p);
            }
            let h: Vec<(usize, usize, f64)> = weight
                .iter()
                .map(|(&e, &w)| (edges[e].0, edges[e].1, w))
                .collect();
            if self.probes_pass(n, &edges, &h, &comps) {
                self.sparsifier = Sparsifier {
                    edges: h.iter().map(|&(u, v, w)| (vs[u], vs[v], w)).collect(),
                    exact: false,
                    draws: q,
                    attempts: attempt,
                };
                return;
            }
            q *= 2;
        }
        self.sparsifier = exact(self.config.max_retries + 1);
    }

    fn probes_pass(
        &mut self,
        n: usize,
        g: &[(usize, usize, f64)],
        h: &[(usize, usize, f64)],
        comps: &[Vec<usize>],
    ) -> bool {
        let g_comps = comps.len();
        let mut h_graph_ok = true;
        if g_comps == 1 {
            h_graph_ok = is_connected(n, h);
        }
        if !h_graph_ok {
            return false;
        }
        (0..self.config.probes).all(|_| {
            let mut x: Vec<f64> = (0..n)
                .map(|_| StandardNormal.sample(&mut self.rng))
                .collect();
            project(&mut x, comps);
            let qg = quad_form(g, &x);
            let qh = quad_form(h, &x);
            (0.5 * qg..=1.5 * qg).contains(&qh)
        })
    }

    fn positions(&self) -> BTreeMap<VertexId, usize> {
        self.graph
            .vertices()
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, i))
            .collect()
    }

    /// Approximate `H^{-1} r` (vertex order).
    pub fn apply_preconditioner(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_len(self.graph.vertex_count(), r.len())?;
        let pos = self.positions();
        let edges: Vec<_> = self
            .sparsifier
            .edges
            .iter()
            .filter_map(|(u, v, w)| Some((*pos.get(u)?, *pos.get(v)?, *w)))
            .collect();
        let lap = WeightedLaplacian::new(r.len(), &edges);
        Ok(lap.solve(r, self.config.inner_tol, &self.graph.components()))
    }

    /// One Richardson step `x − H^{-1}(Lx − b)`.
    pub fn richardson_step(&self, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.graph.laplacian_mv(x)?;
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri -= bi;
        }
        let z = self.apply_preconditioner(&r)?;
        Ok(x.iter().zip(z).map(|(a, b)| a - b).collect())
    }

    /// Iteration count `⌈ln(1/ε)/ln(1/ρ)⌉`.
    pub fn iterations_for(&self, eps: f64) -> usize {
        ((1.0 / eps).ln() / (1.0 / self.config.rho).ln())
            .ceil()
            .max(1.0) as usize
    }

    fn check_rhs(&self, b: &[f64], eps: f64) -> Result<()> {
        check_len(self.graph.vertex_count(), b.len())?;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(OmvError::InvalidInput(format!(
                "tolerance {eps} must lie in (0, 1)"
            )));
        }
        let l1: f64 = b.iter().map(|x| x.abs()).sum();
        if b.iter().sum::<f64>().abs() > 1e-12 * l1 {
            return Err(OmvError::InvalidInput(
                "right-hand side is not orthogonal to the all-ones vector".into(),
            ));
        }
        if !self.graph.is_connected() {
            return Err(OmvError::Disconnected);
        }
        Ok(())
    }

    /// Solves `L x = b` to relative energy-norm error `eps`; `x ⊥ 1`.
    pub fn solve(&mut self, b: &[f64], eps: f64) -> Result<Vec<f64>> {
        self.check_rhs(b, eps)?;
        let n = b.len();
        if b.iter().all(|&x| x == 0.0) {
            return Ok(vec![0.0; n]);
        }
        let iters = self.iterations_for(eps);
        let comps = self.graph.components();
        let edges: Vec<(usize, usize, f64)> = self
            .graph
            .edges()
            .into_iter()
            .map(|(u, v)| (u, v, 1.0))
            .collect();
        for round in 0..2 {
            match self.richardson(b, iters, &edges, round == 0)? {
                Some(mut x) => {
                    project(&mut x, &comps);
                    return Ok(x);
                }
                // The sparsifier no longer matches the graph well enough.
                None => self.refresh_sparsifier(),
            }
        }
        unreachable!("the second round never bails out")
    }

    /// Runs `iters` Richardson steps from zero. With `verify`, watches the
    /// energy-norm ratio of successive corrections (which tracks the error
    /// contraction) and returns `None` once it exceeds `rho`.
    fn richardson(
        &self,
        b: &[f64],
        iters: usize,
        edges: &[(usize, usize, f64)],
        verify: bool,
    ) -> Result<Option<Vec<f64>>> {
        let mut x = vec![0.0; b.len()];
        let mut first = None;
        let mut last = f64::INFINITY;
        for _ in 0..iters {
            let next = self.richardson_step(&x, b)?;
            let step: Vec<f64> = next.iter().zip(&x).map(|(a, c)| a - c).collect();
            let norm = quad_form(edges, &step).max(0.0).sqrt();
            x = next;
            let first = *first.get_or_insert(norm);
            if norm == 0.0 {
                break;
            }
            // Below this level the ratios are dominated by rounding.
            if verify && norm > 1e-9 * first && norm > self.config.rho * last {
                return Ok(None);
            }
            last = norm;
        }
        Ok(Some(x))
    }

    /// `(e_u − e_v)^T L^+ (e_u − e_v)` to relative accuracy `eps`.
    pub fn effective_resistance(&mut self, u: VertexId, v: VertexId, eps: f64) -> Result<f64> {
        let pos = self.positions();
        let pu = *pos.get(&u).ok_or(OmvError::UnknownId(u.0))?;
        let pv = *pos.get(&v).ok_or(OmvError::UnknownId(v.0))?;
        if pu == pv {
            return Ok(0.0);
        }
        let mut b = vec![0.0; pos.len()];
        b[pu] = 1.0;
        b[pv] = -1.0;
        let x = self.solve(&b, eps / 3.0)?;
        Ok(x[pu] - x[pv])
    }
}
