use omv_core::graph::DynGraph;
use omv_core::lapsolve::{dense_solve, energy_norm, SolverConfig, SolverState};
use omv_core::VertexId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn connected_gnp(r: &mut impl Rng, n: usize, p: f64) -> (usize, Vec<(usize, usize)>) {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (r.random_range(0..i), i)).collect();
    for i in 0..n {
        for j in i + 1..n {
            if r.random_bool(p) && !edges.contains(&(i, j)) {
                edges.push((i, j));
            }
        }
    }
    (n, edges)
}

fn centered(r: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut b: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let mean = b.iter().sum::<f64>() / n as f64;
    b.iter_mut().for_each(|x| *x -= mean);
    b
}

#[test]
fn richardson_contracts_by_two_thirds() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let n = rng.random_range(20..=150);
        let p = rng.random_range(0.02..0.3);
        let (n, edges) = connected_gnp(&mut rng, n, p);
        let g = DynGraph::new(n, &edges).unwrap();
        let s = SolverState::new(
            g,
            SolverConfig {
                seed,
                ..Default::default()
            },
        );
        let b = centered(&mut rng, n);
        let xs = dense_solve(s.graph(), &b).unwrap();
        let err = |x: &[f64]| {
            let d: Vec<f64> = x.iter().zip(&xs).map(|(a, b)| a - b).collect();
            energy_norm(s.graph(), &d)
        };
        let scale = energy_norm(s.graph(), &xs);
        let mut x = vec![0.0; n];
        let mut e = err(&x);
        for _ in 0..30 {
            x = s.richardson_step(&x, &b).unwrap();
            let e_next = err(&x);
            if e < 1e-11 * scale {
                break;
            }
            let ratio = e_next / e;
            worst = worst.max(ratio);
            assert!(ratio <= 2.0 / 3.0, "seed {seed}: contraction {ratio}");
            e = e_next;
        }
    }
    println!("worst observed contraction {worst:.3}");
}

#[test]
fn solution_is_centered() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let (n, edges) = connected_gnp(&mut rng, 60, 0.1);
    let mut s = SolverState::new(DynGraph::new(n, &edges).unwrap(), SolverConfig::default());
    let b = centered(&mut rng, n);
    let x = s.solve(&b, 1e-6).unwrap();
    assert!(x.iter().sum::<f64>().abs() < 1e-10);
}

#[test]
fn resistance_is_a_metric() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for seed in 0..50 {
        let n = rng.random_range(4..=30);
        let p = rng.random_range(0.05..0.4);
        let (n, edges) = connected_gnp(&mut rng, n, p);
        let mut s = SolverState::new(
            DynGraph::new(n, &edges).unwrap(),
            SolverConfig {
                seed,
                ..Default::default()
            },
        );
        let eps = 1e-9;
        let mut pick = || VertexId(rng.random_range(0..n as u64));
        let (a, b, c) = (pick(), pick(), pick());
        let rab = s.effective_resistance(a, b, eps).unwrap();
        let rba = s.effective_resistance(b, a, eps).unwrap();
        let rbc = s.effective_resistance(b, c, eps).unwrap();
        let rac = s.effective_resistance(a, c, eps).unwrap();
        assert!((rab - rba).abs() <= 1e-7 * (1.0 + rab), "seed {seed}");
        assert!(
            rac <= rab + rbc + 1e-7,
            "seed {seed}: {rac} > {rab} + {rbc}"
        );
    }
}

#[test]
fn adding_edges_never_raises_resistance() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for seed in 0..10 {
        let (n, edges) = connected_gnp(&mut rng, 25, 0.08);
        let eps = 1e-8;
        let mut s = SolverState::new(
            DynGraph::new(n, &edges).unwrap(),
            SolverConfig {
                seed,
                ..Default::default()
            },
        );
        let pairs: Vec<(VertexId, VertexId)> = (0..5)
            .map(|_| {
                (
                    VertexId(rng.random_range(0..25)),
                    VertexId(rng.random_range(0..25)),
                )
            })
            .collect();
        let before: Vec<f64> = pairs
            .iter()
            .map(|&(u, v)| s.effective_resistance(u, v, eps).unwrap())
            .collect();
        let v = VertexId(rng.random_range(0..25));
        let mut nbrs: Vec<VertexId> = s.graph().neighbors(v).unwrap().iter().copied().collect();
        let extra = VertexId(rng.random_range(0..25));
        if extra != v && !nbrs.contains(&extra) {
            nbrs.push(extra);
        }
        s.vertex_update(v, &nbrs).unwrap();
        for (&(a, b), r0) in pairs.iter().zip(before) {
            let r1 = s.effective_resistance(a, b, eps).unwrap();
            assert!(
                r1 <= r0 * (1.0 + 3.0 * eps) + 1e-12,
                "seed {seed}: {r1} > {r0}"
            );
        }
    }
}

#[test]
fn stays_accurate_across_updates() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let (n, edges) = connected_gnp(&mut rng, 40, 0.1);
    let mut s = SolverState::new(DynGraph::new(n, &edges).unwrap(), SolverConfig::default());
    for step in 0..30 {
        let vs = s.graph().vertices();
        let v = vs[rng.random_range(0..vs.len())];
        let mut nbrs: Vec<VertexId> = vs
            .iter()
            .copied()
            .filter(|&w| w != v && rng.random_bool(0.15))
            .collect();
        if nbrs.is_empty() {
            nbrs.push(if v == vs[0] { vs[1] } else { vs[0] });
        }
        s.vertex_update(v, &nbrs).unwrap();
        if !s.graph().is_connected() {
            continue;
        }
        let b = centered(&mut rng, n);
        let x = s.solve(&b, 1e-8).unwrap();
        let xs = dense_solve(s.graph(), &b).unwrap();
        let d: Vec<f64> = x.iter().zip(&xs).map(|(a, b)| a - b).collect();
        let rel = energy_norm(s.graph(), &d) / energy_norm(s.graph(), &xs);
        assert!(rel <= 1e-8, "step {step}: {rel}");
    }
    assert!(s.refresh_count() > 1);
}
