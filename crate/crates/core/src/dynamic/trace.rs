//! Update traces for [`DynOmv`](super::DynOmv).
//!
//! One command per line; `#` starts a comment:
//!
//! ```text
//! INSCOL coo 0,3,7     # new column with ones at these row ids
//! INSROW coo 1 2       # new row with ones at these column ids
//! DELCOL 4
//! DELROW 0
//! QUERY v.txt          # vector file, one value per line, by column id
//! QUERY inline 1,0,-2  # vector given in place
//! ```
//!
//! Relative vector paths resolve against the trace file's directory.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use super::shadow::ShadowMatrix;
use super::{ColId, DynOmv, RowId};
use crate::bitmatrix::{read_vector, BitMatrix};
use crate::error::{OmvError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum VectorSource {
    File(PathBuf),
    Inline(Vec<String>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    InsCol(Vec<u64>),
    InsRow(Vec<u64>),
    DelCol(u64),
    DelRow(u64),
    Query(VectorSource),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceLine {
    pub line: usize,
    pub command: Command,
}

fn split_list<'a>(rest: &'a [&'a str]) -> impl Iterator<Item = &'a str> {
    rest.iter()
        .flat_map(|t| t.split(','))
        .map(str::trim)
        .filter(|t| !t.is_empty())
}

fn parse_ids(rest: &[&str], line: usize) -> Result<Vec<u64>> {
    split_list(rest)
        .map(|t| {
            t.parse()
                .map_err(|_| OmvError::parse(line, format!("bad id `{t}`")))
        })
        .collect()
}

fn parse_id(rest: &[&str], line: usize) -> Result<u64> {
    match rest {
        [t] => t
            .parse()
            .map_err(|_| OmvError::parse(line, format!("bad id `{t}`"))),
        _ => Err(OmvError::parse(line, "expected exactly one id")),
    }
}

pub fn parse_line(text: &str, line: usize) -> Result<Option<Command>> {
    let text = text.split('#').next().unwrap_or("");
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let Some((&op, rest)) = tokens.split_first() else {
        return Ok(None);
    };
    let command = match op {
        "INSCOL" | "INSROW" => {
            let Some((&"coo", ids)) = rest.split_first() else {
                return Err(OmvError::parse(line, format!("{op} expects `coo <ids>`")));
            };
            let ids = parse_ids(ids, line)?;
            if op == "INSCOL" {
                Command::InsCol(ids)
            } else {
                Command::InsRow(ids)
            }
        }
        "DELCOL" => Command::DelCol(parse_id(rest, line)?),
        "DELROW" => Command::DelRow(parse_id(rest, line)?),
        "QUERY" => match rest {
            [path] => Command::Query(VectorSource::File(PathBuf::from(path))),
            ["inline", values @ ..] => Command::Query(VectorSource::Inline(
                split_list(values).map(str::to_owned).collect(),
            )),
            _ => return Err(OmvError::parse(line, "QUERY expects a vector file")),
        },
        other => return Err(OmvError::parse(line, format!("unknown command `{other}`"))),
    };
    Ok(Some(command))
}

pub fn parse_trace<R: BufRead>(reader: R) -> Result<Vec<TraceLine>> {
    let mut out = Vec::new();
    for (i, text) in reader.lines().enumerate() {
        if let Some(command) = parse_line(&text?, i + 1)? {
            out.push(TraceLine {
                line: i + 1,
                command,
            });
        }
    }
    Ok(out)
}

/// Query vector; integral inputs stay integral so results are exact.
#[derive(Clone, Debug, PartialEq)]
pub enum QueryValues {
    Int(Vec<i64>),
    Real(Vec<f64>),
}

impl QueryValues {
    pub fn parse(tokens: &[String], line: usize) -> Result<Self> {
        if let Ok(v) = tokens.iter().map(|t| t.parse::<i64>()).collect() {
            return Ok(QueryValues::Int(v));
        }
        tokens
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| OmvError::parse(line, format!("bad number `{t}`")))
            })
            .collect::<Result<_>>()
            .map(QueryValues::Real)
    }

    pub fn len(&self) -> usize {
        match self {
            QueryValues::Int(v) => v.len(),
            QueryValues::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum QueryOutput {
    Int(Vec<i64>),
    Real(Vec<f64>),
}

impl QueryOutput {
    /// Comma-separated rendering used by the CLI.
    pub fn render(&self) -> String {
        match self {
            QueryOutput::Int(v) => v.iter().map(i64::to_string).collect::<Vec<_>>().join(","),
            QueryOutput::Real(v) => v.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReplaySummary {
    pub operations: usize,
    pub queries: usize,
    pub mismatches: usize,
}

/// Drives a [`DynOmv`] through trace commands, optionally mirroring every
/// operation on a [`ShadowMatrix`] and auditing after each step.
pub struct Replayer {
    engine: DynOmv,
    shadow: Option<ShadowMatrix>,
    base_dir: PathBuf,
    summary: ReplaySummary,
}

impl Replayer {
    pub fn new(m: &BitMatrix, audit: bool) -> Self {
        Replayer {
            engine: DynOmv::new(m),
            shadow: audit.then(|| ShadowMatrix::new(m)),
            base_dir: PathBuf::from("."),
            summary: ReplaySummary::default(),
        }
    }

    pub fn with_base_dir(mut self, dir: impl AsRef<Path>) -> Self {
        self.base_dir = dir.as_ref().to_path_buf();
        self
    }

    pub fn engine(&self) -> &DynOmv {
        &self.engine
    }

    pub fn summary(&self) -> &ReplaySummary {
        &self.summary
    }

    fn indicator<I: Copy + Ord>(
        live: &[I],
        ones: &[u64],
        wrap: fn(u64) -> I,
        line: usize,
    ) -> Result<Vec<bool>> {
        let set: HashSet<u64> = ones.iter().copied().collect();
        if set.len() != ones.len() {
            return Err(OmvError::parse(line, "duplicate id"));
        }
        let mut bits = vec![false; live.len()];
        for &id in &set {
            let pos = live
                .binary_search(&wrap(id))
                .map_err(|_| OmvError::UnknownId(id))?;
            bits[pos] = true;
        }
        Ok(bits)
    }

    fn load(&self, source: &VectorSource, line: usize) -> Result<QueryValues> {
        match source {
            VectorSource::Inline(tokens) => QueryValues::parse(tokens, line),
            VectorSource::File(path) => {
                let path = self.base_dir.join(path);
                let file = File::open(&path).map_err(|e| {
                    OmvError::parse(line, format!("cannot open {}: {e}", path.display()))
                })?;
                let tokens: Vec<String> = read_vector(BufReader::new(file))?;
                QueryValues::parse(&tokens, line)
            }
        }
    }

    /// Applies one command. Queries return their output; a shadow mismatch
    /// is counted, and any audit failure is reported as an error.
    pub fn step(&mut self, entry: &TraceLine) -> Result<Option<QueryOutput>> {
        let line = entry.line;
        self.summary.operations += 1;
        let out = match &entry.command {
            Command::InsCol(rows) => {
                let bits = Self::indicator(&self.engine.row_ids(), rows, RowId, line)?;
                self.engine.insert_col(&bits)?;
                if let Some(s) = &mut self.shadow {
                    s.insert_col(&bits)?;
                }
                None
            }
            Command::InsRow(cols) => {
                let bits = Self::indicator(&self.engine.col_ids(), cols, ColId, line)?;
                self.engine.insert_row(&bits)?;
                if let Some(s) = &mut self.shadow {
                    s.insert_row(&bits)?;
                }
                None
            }
            Command::DelCol(id) => {
                self.engine.delete_col(ColId(*id))?;
                if let Some(s) = &mut self.shadow {
                    s.delete_col(ColId(*id))?;
                }
                None
            }
            Command::DelRow(id) => {
                self.engine.delete_row(RowId(*id))?;
                if let Some(s) = &mut self.shadow {
                    s.delete_row(RowId(*id))?;
                }
                None
            }
            Command::Query(source) => {
                self.summary.queries += 1;
                let values = self.load(source, line)?;
                Some(self.query(&values)?)
            }
        };
        if self.shadow.is_some() {
            self.engine
                .audit()
                .map_err(|e| OmvError::InvalidInput(format!("line {line}: audit failed: {e}")))?;
        }
        Ok(out)
    }

    fn query(&mut self, values: &QueryValues) -> Result<QueryOutput> {
        Ok(match values {
            QueryValues::Int(v) => {
                let out = self.engine.query(v)?;
                if let Some(s) = &self.shadow {
                    if s.mv(v)? != out {
                        self.summary.mismatches += 1;
                    }
                }
                QueryOutput::Int(out)
            }
            QueryValues::Real(v) => {
                let out = self.engine.query(v)?;
                if let Some(s) = &self.shadow {
                    let expect = s.mv(v)?;
                    let tol = 1e-9 * (1.0 + v.iter().map(|x| x.abs()).sum::<f64>());
                    if expect.iter().zip(&out).any(|(a, b)| (a - b).abs() > tol) {
                        self.summary.mismatches += 1;
                    }
                }
                QueryOutput::Real(out)
            }
        })
    }

    /// Replays a whole trace, passing each query result to `sink`.
    pub fn run(
        &mut self,
        trace: &[TraceLine],
        mut sink: impl FnMut(&TraceLine, &QueryOutput),
    ) -> Result<ReplaySummary> {
        for entry in trace {
            if let Some(out) = self.step(entry)? {
                sink(entry, &out);
            }
        }
        Ok(self.summary.clone())
    }
}
