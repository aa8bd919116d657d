//! Corpus toolkit for table structure and content recognition datasets.
//!
//! The pipeline turns a directory of LaTeX sources into model-ready datasets:
//!
//! 1. [`corpus`] walks the source tree and yields documents in a stable order.
//! 2. [`extract`] pulls self-contained `tabular` snippets out of each document,
//!    cleaning comments and noise commands along the way.
//! 3. [`tokenize`] lexes snippets and builds structure / content token streams.
//! 4. [`render`] compiles snippets to table images via external commands.
//! 5. [`dataset`] assembles split manifests and summary statistics.
//! 6. [`metrics`] scores predicted token streams against the ground truth.
//!
//! [`pipeline`] wires the stages together on disk; the `textab` binary is a
//! thin CLI over it.

pub mod config;
pub mod corpus;
pub mod dataset;
pub mod error;
pub mod extract;
pub mod jsonl;
pub mod metrics;
pub mod pipeline;
pub mod render;
pub mod tokenize;

pub use error::{Error, Result};
