// SPDX-License-Identifier: Apache-2.0

//! File formats, reports, experiment drivers and bundled benchmarks for
//! [`nocsynth_core`].

pub mod bench;
pub mod benchmarks;
pub mod format;
pub mod report;
pub mod run;

use nocsynth_core::synth::StageError;

pub use nocsynth_core;

/// Everything the command line can fail with.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: format::FormatError },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Synthesis(#[from] StageError),
    #[error("writing {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("incremental tables diverged from the re-solve")]
    Mismatch,
}

impl CliError {
    /// 2 for bad input, 3 for infeasible instances, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::Synthesis(e) if e.error.is_infeasible() => 3,
            CliError::Synthesis(e) => match e.error {
                nocsynth_core::Error::MalformedGraph(_) | nocsynth_core::Error::InvalidConfig(_) => 2,
                _ => 1,
            },
            CliError::Write { .. } | CliError::Mismatch => 1,
        }
    }
}
