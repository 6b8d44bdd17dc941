use std::fs::File;
use std::io::BufReader;

use anyhow::{Context, Result};
use omv_core::bitmatrix::{read_matrix, read_vector};
use omv_core::dynamic::trace::QueryValues;
use omv_core::{BitMatrix, DynGraph};

fn open(path: &str) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {path}"))?;
    Ok(BufReader::new(file))
}

pub fn matrix(path: &str) -> Result<BitMatrix> {
    read_matrix(open(path)?).with_context(|| path.to_string())
}

pub fn graph(path: &str) -> Result<DynGraph> {
    DynGraph::read(open(path)?).with_context(|| path.to_string())
}

/// Integral vectors stay integral; anything else is read as reals.
pub fn vector(path: &str) -> Result<QueryValues> {
    if let Ok(v) = read_vector::<i64, _>(open(path)?) {
        return Ok(QueryValues::Int(v));
    }
    Ok(QueryValues::Real(real_vector(path)?))
}

pub fn real_vector(path: &str) -> Result<Vec<f64>> {
    read_vector(open(path)?).with_context(|| path.to_string())
}
