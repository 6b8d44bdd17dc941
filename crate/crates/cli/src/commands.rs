use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use omv_core::bitmatrix::{write_matrix, MatrixFormat};
use omv_core::dynamic::trace::{parse_trace, QueryValues, Replayer};
use omv_core::engine::Algo;
use omv_core::lapsolve::{SolverConfig, SolverState};
use omv_core::synth::SynthSpec;
use omv_core::tree::linearize;
use omv_core::{QueryStats, StaticOmv, VertexId};

use crate::{input, AlgoArg, FormatArg, GraphCommand};

pub fn build(matrix: &str, dump: Option<&str>, lin: bool, out: &mut impl Write) -> Result<()> {
    let m = input::matrix(matrix)?;
    let engine = StaticOmv::preprocess(m);
    writeln!(out, "rows {}", engine.rows())?;
    writeln!(out, "cols {}", engine.cols())?;
    writeln!(out, "row_tree_weight {}", engine.row_tree().weight())?;
    writeln!(out, "col_tree_weight {}", engine.col_tree().weight())?;
    let preferred = match engine.preferred() {
        Algo::RowTree => "row",
        Algo::ColTree => "col",
    };
    writeln!(out, "preferred {preferred}")?;
    let tree = if lin {
        let line = linearize(engine.col_tree(), engine.matrix())?;
        writeln!(out, "linearized_weight {}", line.weight())?;
        line
    } else {
        engine.col_tree().clone()
    };
    if let Some(path) = dump {
        let file = File::create(path).with_context(|| format!("cannot create {path}"))?;
        let mut w = BufWriter::new(file);
        tree.dump(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn print_values<T: std::fmt::Display>(values: &[T], out: &mut impl Write) -> Result<()> {
    for v in values {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

pub fn mv(
    matrix: &str,
    vector: &str,
    algo: AlgoArg,
    stats: bool,
    out: &mut impl Write,
) -> Result<()> {
    let m = input::matrix(matrix)?;
    let values = input::vector(vector)?;
    if values.len() != m.cols() {
        bail!(
            "vector has {} entries but the matrix has {} columns",
            values.len(),
            m.cols()
        );
    }
    if algo == AlgoArg::Naive {
        return match values {
            QueryValues::Int(v) => print_values(&m.naive_mv(&v)?, out),
            QueryValues::Real(v) => print_values(&m.naive_mv(&v)?, out),
        };
    }
    let engine = StaticOmv::preprocess(m);
    let pick = match algo {
        AlgoArg::Row => Algo::RowTree,
        AlgoArg::Col => Algo::ColTree,
        _ => engine.preferred(),
    };
    let st: QueryStats = match values {
        QueryValues::Int(v) => {
            let (y, st) = engine.mv_with(pick, &v)?;
            print_values(&y, out)?;
            st
        }
        QueryValues::Real(v) => {
            let (y, st) = engine.mv_with(pick, &v)?;
            print_values(&y, out)?;
            st
        }
    };
    if stats {
        eprintln!(
            "touched_nonzeros {} dense_ops {}",
            st.touched_nonzeros, st.dense_ops
        );
    }
    Ok(())
}

pub fn replay(matrix: &str, trace: &str, audit: bool, out: &mut impl Write) -> Result<()> {
    let m = input::matrix(matrix)?;
    let file = File::open(trace).with_context(|| format!("cannot open {trace}"))?;
    let commands = parse_trace(BufReader::new(file)).with_context(|| trace.to_string())?;
    let base = Path::new(trace).parent().unwrap_or(Path::new("."));
    let mut replayer = Replayer::new(&m, audit).with_base_dir(base);
    let mut io_error = None;
    let summary = replayer
        .run(&commands, |_, result| {
            if let Err(e) = writeln!(out, "{}", result.render()) {
                io_error.get_or_insert(e);
            }
        })
        .with_context(|| trace.to_string())?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    if audit {
        eprintln!(
            "audit: {} operations, {} queries, {} mismatches",
            summary.operations, summary.queries, summary.mismatches
        );
        if summary.mismatches > 0 {
            bail!(
                "{} queries disagreed with the shadow matrix",
                summary.mismatches
            );
        }
    }
    Ok(())
}

pub fn graph(command: GraphCommand, out: &mut impl Write) -> Result<()> {
    match command {
        GraphCommand::Triangle { graph } => {
            let g = input::graph(&graph)?;
            writeln!(out, "vertices {}", g.vertex_count())?;
            writeln!(out, "edges {}", g.edge_count())?;
            writeln!(out, "trace {}", g.triangle_trace())?;
            writeln!(out, "triangles {}", g.triangle_count())?;
            writeln!(out, "has_triangle {}", g.has_triangle())?;
        }
        GraphCommand::Sssp {
            graph,
            source,
            dmax,
        } => {
            let g = input::graph(&graph)?;
            let dmax = dmax.unwrap_or(g.vertex_count().saturating_sub(1));
            let dist = g.bounded_sssp(VertexId(source), dmax)?;
            for (v, d) in g.vertices().iter().zip(dist) {
                match d {
                    Some(d) => writeln!(out, "{v} {d}")?,
                    None => writeln!(out, "{v} inf")?,
                }
            }
        }
        GraphCommand::Solve {
            graph,
            vector,
            eps,
            seed,
        } => {
            let g = input::graph(&graph)?;
            let b = input::real_vector(&vector)?;
            let mut s = SolverState::new(
                g,
                SolverConfig {
                    seed,
                    ..Default::default()
                },
            );
            print_values(&s.solve(&b, eps)?, out)?;
        }
        GraphCommand::Resist {
            graph,
            u,
            v,
            eps,
            seed,
        } => {
            let g = input::graph(&graph)?;
            let mut s = SolverState::new(
                g,
                SolverConfig {
                    seed,
                    ..Default::default()
                },
            );
            writeln!(
                out,
                "{}",
                s.effective_resistance(VertexId(u), VertexId(v), eps)?
            )?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn gen(
    family: &str,
    rows: usize,
    cols: usize,
    corruption: usize,
    seed: u64,
    format: FormatArg,
    path: Option<&str>,
    out: &mut impl Write,
) -> Result<()> {
    let spec = SynthSpec::new(family.parse()?, rows, cols)
        .with_corruption(corruption)
        .with_seed(seed);
    let m = spec.generate()?;
    let format = match format {
        FormatArg::Dense => MatrixFormat::Dense,
        FormatArg::Coo => MatrixFormat::Coo,
    };
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("cannot create {p}"))?;
            let mut w = BufWriter::new(file);
            write_matrix(&m, &mut w, format)?;
            w.flush()?;
        }
        None => write_matrix(&m, &mut *out, format)?,
    }
    Ok(())
}
