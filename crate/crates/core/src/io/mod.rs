//! File formats: dataset CSVs, run configuration, bounds, fronts,
//! schedules and reward curves.
//!
//! Every reader reports problems as `file:line: message`. Every writer goes
//! through [`write_atomic`], which writes a temporary file in the target
//! directory and renames it into place.

mod config;
mod dataset;
mod results;

pub use config::{BoundsMethodName, BoundsSettings, RunConfig, RunSnapshot};
pub use dataset::{load_dataset, write_dataset};
pub use results::{
    read_bounds, read_curve, read_front, read_objectives, read_schedule, write_bounds, write_curve, write_front,
    write_objectives, write_schedule, FrontRow, ObjectivesRecord,
};

use std::io::Write;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Data { path: String, line: u64, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl IoError {
    pub(crate) fn invalid(path: &Path, message: impl Into<String>) -> Self {
        Self::Invalid {
            path: path.display().to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn data(path: &Path, line: u64, message: impl Into<String>) -> Self {
        Self::Data {
            path: path.display().to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn read(path: &Path, source: std::io::Error) -> Self {
        Self::Read {
            path: path.display().to_string(),
            source,
        }
    }

    /// True for failures caused by the input files rather than the
    /// environment.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Self::Write { .. })
    }
}

/// Writes `path` through a temporary sibling file and an atomic rename.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<(), IoError>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let werr = |source| IoError::Write {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(werr)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(werr)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf).map_err(werr)?;
        buf.flush().map_err(werr)?;
    }
    tmp.persist(path).map_err(|e| werr(e.error))?;
    Ok(())
}
