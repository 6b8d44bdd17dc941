//! Online matrix-vector multiplication for structured Boolean matrices.
//!
//! A matrix is preprocessed into Δ-labeled spanning trees over the Hamming
//! metric on its columns (and on its rows). A product `Mv` then costs time
//! proportional to the tree weight instead of `mn`, which is small for
//! matrices of low (corrupted) VC-dimension.
//!
//! Layers:
//! - [`bitmatrix`]: bit-packed storage, Hamming kernels, file formats.
//! - [`tree`]: minimum spanning trees with sparse difference labels.
//! - [`engine`]: the static query engine.
//! - [`dynamic`]: row/column insertions and deletions via dyadic buckets.
//! - [`pollard`]: numeric matrices with few distinct values.
//! - [`graph`]: dynamic graphs (triangles, Laplacian products, bounded BFS).
//! - [`lapsolve`]: sparsifier-preconditioned Laplacian solver.
//! - [`synth`]: generators for structured test matrices.

pub mod bitmatrix;
pub mod dynamic;
pub mod engine;
pub mod error;
pub mod graph;
pub mod lapsolve;
pub mod pollard;
pub mod scalar;
pub mod synth;
pub mod tree;

pub use bitmatrix::{BitMatrix, DeltaEntry, Sign, SparseDelta};
pub use dynamic::{ColId, DynOmv, RowId};
pub use engine::{QueryStats, StaticOmv};
pub use error::{OmvError, Result};
pub use graph::{DynGraph, VertexId};
pub use lapsolve::{SolverConfig, SolverState};
pub use pollard::{NumericMatrix, ThresholdDecomp};
pub use scalar::Scalar;
pub use synth::{Family, SynthSpec};
pub use tree::DeltaTree;
