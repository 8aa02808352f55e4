//! Error type shared by every stage of the pipeline.

use std::path::PathBuf;

/// Errors raised while loading, aligning, or analyzing a price panel.
///
/// Each variant's message is prefixed with the stage that produced it so the
/// CLI can print a diagnostic without extra bookkeeping.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("ingest: cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("ingest: line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("ingest: duplicate date {date} (line {line})")]
    DuplicateDate { date: String, line: u64 },

    #[error("ingest: {0}")]
    Ingest(String),

    #[error("ingest: ticker '{0}' has no price on any date")]
    TickerAllMissing(String),

    #[error("ingest: window '{0}' does not overlap the panel's dates")]
    EmptyWindow(String),

    #[error("ingest: invalid window configuration: {0}")]
    Config(String),

    #[error("returns: {0}")]
    Returns(String),

    #[error("returns: ticker '{0}' has zero volatility (constant price series)")]
    ZeroVolatility(String),

    #[error("correlation: {0}")]
    Correlation(String),

    #[error("spectral: Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("spectral: {0}")]
    Spectral(String),

    #[error("rmt: {0}")]
    Rmt(String),

    #[error("analysis: ticker sets differ; only in A: {only_a:?}, only in B: {only_b:?}")]
    TickerMismatch {
        only_a: Vec<String>,
        only_b: Vec<String>,
    },

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("window '{window}': {source}")]
    Window {
        window: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_window(self, window: &str) -> Error {
        Error::Window {
            window: window.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
