use std::path::Path;

use roadspoof_core::cache::CacheError;
use roadspoof_core::graph::GraphError;
use roadspoof_core::metrics::MetricsError;
use roadspoof_core::osm::OsmError;
use roadspoof_core::spoof::SearchError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Parse(#[from] OsmError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Stable identifier printed on stderr.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Io { .. } => "IoError",
            Self::Parse(OsmError::Io(_)) => "IoError",
            Self::Parse(_) => "ParseError",
            Self::Graph(_) => "GraphError",
            Self::Cache(CacheError::Io(_)) => "IoError",
            Self::Cache(CacheError::VersionMismatch { .. }) => "CacheVersionMismatch",
            Self::Cache(CacheError::HashMismatch) => "CacheHashMismatch",
            Self::Cache(_) => "CacheCorrupted",
            Self::Search(SearchError::NoPath { .. }) => "NoPath",
            Self::Search(SearchError::InvalidParams(_)) => "InvalidConfig",
            Self::Search(_) => "SearchError",
            Self::Metrics(_) => "MetricsError",
            Self::InvalidConfig(_) => "InvalidConfig",
            Self::InvalidArgument(_) => "InvalidArgument",
            Self::Csv(_) | Self::Json(_) => "SerializationError",
        }
    }
}
