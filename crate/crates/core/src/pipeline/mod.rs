//! End-to-end run: load inputs, compute every product in memory, then hand
//! the finished [`ReportBundle`] to a single writer that also emits the
//! manifest.

mod bundle;
mod config;
mod report;
mod run;

use std::fmt;

use thiserror::Error;

pub use bundle::{Manifest, ManifestEntry, ReportBundle, MANIFEST_NAME};
pub use config::{ClimateInputs, NetworkInputs, RandomConfig, RunConfig};
pub use report::render_plots;
pub use run::{build, ingest, load_climate, ClimateData, Stages, THREADS_ENV};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Centrality,
    Hotdays,
    Simulate,
    Report,
    Write,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Centrality => "centrality",
            Stage::Hotdays => "hotdays",
            Stage::Simulate => "simulate",
            Stage::Report => "report",
            Stage::Write => "write",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Broad failure class; decides the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Internal,
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{stage} stage: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, kind: ErrorKind, message: impl Into<String>) -> Self {
        PipelineError { stage, kind, message: message.into() }
    }

    pub fn data(stage: Stage, err: impl fmt::Display) -> Self {
        Self::new(stage, ErrorKind::Data, err.to_string())
    }

    pub fn internal(stage: Stage, err: impl fmt::Display) -> Self {
        Self::new(stage, ErrorKind::Internal, err.to_string())
    }

    /// 2 for configuration errors, 3 for bad input data, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Internal => 4,
        }
    }
}
