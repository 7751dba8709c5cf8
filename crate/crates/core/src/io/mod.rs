//! On-disk formats: dataset records, binary embeddings, dependency parses,
//! probability caches, toy oracles, probe parameters and tree exports.
//!
//! Every loader reports where a file went wrong: a line number for text
//! formats, a byte offset for binary ones.

mod cache;
mod corpus;
mod dataset;
mod embeddings;
mod parses;
mod probe_file;
mod synthetic;
mod toy;
mod tree_export;

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use cache::{load_cache, write_cache, ProbCache};
pub use corpus::{load_caches_for, load_corpus, load_toy_for, CorpusExample, DataLayout, FULL_PROB_TOLERANCE};
pub use dataset::{load_dataset, parse_dataset, write_dataset, DatasetRecord};
pub use embeddings::{load_embeddings, parse_embeddings, write_embeddings, EmbeddingFile, EMBEDDING_MAGIC, EMBEDDING_VERSION};
pub use parses::{load_parses, parse_parses, write_parses, ParseEntry};
pub use probe_file::{load_probe, write_probe, ProbeFile};
pub use synthetic::{write_synthetic_corpus, SyntheticCorpusSpec};
pub use toy::{load_toy_oracles, parse_toy_oracles, write_toy_oracles, ToyOracleRecord};
pub use tree_export::{export_dot, export_json, import_json, MergeExport, TreeExport};

/// Location of a problem inside a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    /// 1-based line.
    Line(usize),
    /// 0-based byte offset.
    Byte(u64),
    /// The file as a whole (e.g. a missing required entry).
    File,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Line(l) => write!(f, "line {l}"),
            Position::Byte(b) => write!(f, "byte {b}"),
            Position::File => f.write_str("file"),
        }
    }
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {position}: {message}", path.display())]
    Invalid {
        path: PathBuf,
        position: Position,
        message: String,
    },
}

impl FormatError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn invalid(path: &Path, position: Position, message: impl Into<String>) -> Self {
        FormatError::Invalid {
            path: path.to_path_buf(),
            position,
            message: message.into(),
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, FormatError::Io { .. })
    }

    pub fn position(&self) -> Option<Position> {
        match self {
            FormatError::Invalid { position, .. } => Some(*position),
            FormatError::Io { .. } => None,
        }
    }
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>, FormatError> {
    std::fs::read(path).map_err(|e| FormatError::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String, FormatError> {
    let bytes = read_bytes(path)?;
    String::from_utf8(bytes).map_err(|e| {
        FormatError::invalid(
            path,
            Position::Byte(e.utf8_error().valid_up_to() as u64),
            "invalid UTF-8",
        )
    })
}

/// Writes through a temporary sibling and renames into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| FormatError::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| FormatError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| FormatError::io(path, e))
}

/// A whole-file JSON document error, positioned at serde_json's line.
pub(crate) fn json_error(path: &Path, e: &serde_json::Error) -> FormatError {
    FormatError::invalid(path, Position::Line(e.line().max(1)), e.to_string())
}

/// An error in one JSON Lines record.
pub(crate) fn jsonl_error(path: &Path, line: usize, e: &serde_json::Error) -> FormatError {
    FormatError::invalid(path, Position::Line(line), format!("column {}: {e}", e.column()))
}

/// Example ids double as file names, so they are restricted to a portable
/// character set.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 200
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}
