//! Benchmark harness: generate, preprocess, query, report JSON.

use std::io::Write;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use omv_core::engine::Algo;
use omv_core::synth::{stream_rng, Family, SynthSpec};
use omv_core::tree::linearize;
use omv_core::StaticOmv;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const SCHEMA: u32 = 1;

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value = "interval")]
    pub family: String,
    /// `a..b` doubles from a to b; otherwise a comma-separated list.
    #[arg(long, default_value = "64..1024")]
    pub sizes: String,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 8)]
    pub queries: usize,
    /// Coefficient `c`: each row gets `floor(c * n^(1 - 1/d))` flips.
    #[arg(long, default_value_t = 0.0)]
    pub corruption: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<String>,
    /// Report the log-log slope of column-tree weight against n.
    #[arg(long)]
    pub fit: bool,
    /// Also report linearized column-tree weights.
    #[arg(long)]
    pub linearize: bool,
}

#[derive(Serialize, Debug, Clone, Copy)]
pub struct QueryRecord {
    pub touched_nonzeros: usize,
    pub dense_ops: usize,
}

#[derive(Serialize, Debug)]
pub struct BenchRecord {
    pub family: String,
    pub n: usize,
    pub m: usize,
    pub rep: usize,
    pub seed: u64,
    pub claimed_d: Option<u32>,
    pub corruption_per_row: usize,
    pub row_tree_weight: usize,
    pub col_tree_weight: usize,
    pub linearized_weight: Option<usize>,
    pub preferred: &'static str,
    pub naive_ops: usize,
    pub queries: Vec<QueryRecord>,
    pub preprocess_ms: f64,
    pub query_ms_mean: f64,
}

#[derive(Serialize, Debug)]
pub struct Fit {
    pub metric: &'static str,
    pub points: Vec<(usize, f64)>,
    pub slope: f64,
}

#[derive(Serialize, Debug)]
pub struct BenchReport {
    pub schema: u32,
    pub engine_version: &'static str,
    pub family: String,
    pub corruption_coefficient: f64,
    pub seed: u64,
    pub threads: usize,
    pub deviations: Vec<&'static str>,
    pub records: Vec<BenchRecord>,
    pub fit: Option<Fit>,
}

pub fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .with_context(|| format!("bad size `{t}`"))
    };
    let sizes = if let Some((a, b)) = s.split_once("..") {
        let (mut a, b) = (parse(a)?, parse(b)?);
        if a == 0 || a > b {
            bail!("size range `{s}` must satisfy 0 < a <= b");
        }
        let mut out = Vec::new();
        while a <= b {
            out.push(a);
            a *= 2;
        }
        out
    } else {
        s.split(',').map(parse).collect::<Result<Vec<_>>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        bail!("sizes must be positive");
    }
    Ok(sizes)
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn loglog_slope(points: &[(usize, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| ((x as f64).ln(), y.max(1.0).ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

/// `floor(c * n^(1 - 1/d))`; families without a documented `d` use `d = 2`.
pub fn corruption_budget(c: f64, n: usize, d: Option<u32>) -> usize {
    let d = f64::from(d.unwrap_or(2));
    (c * (n as f64).powf(1.0 - 1.0 / d)).floor() as usize
}

fn cell(args: &BenchArgs, family: Family, n: usize, rep: usize) -> Result<BenchRecord> {
    let seed = stream_rng(args.seed, &format!("bench/{n}/{rep}")).random::<u64>();
    let per_row = corruption_budget(args.corruption, n, family.claimed_d());
    let spec = SynthSpec::new(family, n, n)
        .with_corruption(per_row)
        .with_seed(seed);
    let m = spec.generate()?;
    let t0 = Instant::now();
    let engine = StaticOmv::preprocess(m);
    let preprocess_ms = t0.elapsed().as_secs_f64() * 1e3;
    let linearized_weight = if args.linearize {
        Some(linearize(engine.col_tree(), engine.matrix())?.weight())
    } else {
        None
    };
    let mut rng = stream_rng(seed, "queries");
    let mut queries = Vec::with_capacity(args.queries);
    let t1 = Instant::now();
    for _ in 0..args.queries {
        let v: Vec<i64> = (0..n).map(|_| rng.random_range(-1000..=1000)).collect();
        let (_, st) = engine.mv(&v)?;
        queries.push(QueryRecord {
            touched_nonzeros: st.touched_nonzeros,
            dense_ops: st.dense_ops,
        });
    }
    let query_ms_mean = t1.elapsed().as_secs_f64() * 1e3 / args.queries.max(1) as f64;
    Ok(BenchRecord {
        family: family.to_string(),
        n,
        m: n,
        rep,
        seed,
        claimed_d: family.claimed_d(),
        corruption_per_row: per_row,
        row_tree_weight: engine.row_tree().weight(),
        col_tree_weight: engine.col_tree().weight(),
        linearized_weight,
        preferred: match engine.preferred() {
            Algo::RowTree => "row",
            Algo::ColTree => "col",
        },
        naive_ops: n * n,
        queries,
        preprocess_ms,
        query_ms_mean,
    })
}

pub fn report(args: &BenchArgs) -> Result<BenchReport> {
    let family: Family = args.family.parse()?;
    let sizes = parse_sizes(&args.sizes)?;
    if args.reps == 0 {
        bail!("--reps must be at least 1");
    }
    if args.corruption.is_nan() || args.corruption < 0.0 {
        bail!("--corruption must be nonnegative");
    }
    let cells: Vec<(usize, usize)> = sizes
        .iter()
        .flat_map(|&n| (0..args.reps).map(move |r| (n, r)))
        .collect();
    let records = cells
        .par_iter()
        .map(|&(n, rep)| cell(args, family, n, rep).with_context(|| format!("size {n}, rep {rep}")))
        .collect::<Result<Vec<_>>>()?;
    let fit = args.fit.then(|| {
        let points: Vec<(usize, f64)> = sizes
            .iter()
            .map(|&n| {
                let ws: Vec<f64> = records
                    .iter()
                    .filter(|r| r.n == n)
                    .map(|r| r.col_tree_weight as f64)
                    .collect();
                (n, ws.iter().sum::<f64>() / ws.len() as f64)
            })
            .collect();
        Fit {
            metric: "col_tree_weight",
            slope: loglog_slope(&points),
            points,
        }
    });
    Ok(BenchReport {
        schema: SCHEMA,
        engine_version: env!("CARGO_PKG_VERSION"),
        family: family.to_string(),
        corruption_coefficient: args.corruption,
        seed: args.seed,
        threads: rayon::current_num_threads(),
        deviations: vec![
            "spanning trees are exact Hamming MSTs (Prim), not approximate LSH trees",
            "Laplacian sparsifiers are recomputed every ceil(n/4) vertex updates instead of maintained dynamically",
        ],
        records,
        fit,
    })
}

pub fn run(args: &BenchArgs, out: &mut impl Write) -> Result<()> {
    let report = report(args)?;
    let json = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, format!("{json}\n"))
                .with_context(|| format!("cannot write {path}"))?;
            if let Some(fit) = &report.fit {
                writeln!(out, "slope {:.4}", fit.slope)?;
            }
        }
        None => writeln!(out, "{json}")?,
    }
    Ok(())
}
