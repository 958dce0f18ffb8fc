//! Declarative experiment configs, the simulation-study runners and their
//! CSV/JSON writers.

mod builtins;
mod config;
mod output;
mod study;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fem::FemError;
use crate::inference::InferenceError;
use crate::mesh::MeshError;
use crate::prior::PriorError;

pub use builtins::{
    builtin_conductivity, builtin_truth_f0, bump_psi, canonical_id, lookup, BUMP_CENTER, BUMP_RADIUS, IDS,
};
pub use config::{ConfigError, ExperimentConfig, Truncation};
pub use output::{
    fmt_float, provenance_line, write_coverage, write_cross_section, write_eigenvalues, write_posterior, Table1Writer,
};
pub use study::{AxisSection, CoverageReport, CrossSection, ErrorRow, ErrorTable, Study, SECTION_POINTS};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Prior(#[from] PriorError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

impl ExperimentError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 1 for configuration, usage and file-system problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io { .. } | Self::InvalidArgument(_) => 1,
            _ => 2,
        }
    }
}
