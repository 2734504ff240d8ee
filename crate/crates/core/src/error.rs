use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("{path}: {malformed} of {total} lines malformed (limit 10%); first problem: {first}")]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
        first: String,
    },

    #[error("unknown candidate `{0}`")]
    UnknownCandidate(String),

    #[error("candidate `{candidate}` skipped: {reason}")]
    CandidateSkipped { candidate: String, reason: String },

    #[error("walk did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("design matrix is rank deficient; collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("scorer protocol error: {0}")]
    Protocol(String),

    #[error("missing artifact `{artifact}` (produced by stage `{stage}`)")]
    MissingArtifact { stage: String, artifact: String },

    #[error("stale artifact from stage `{stage}`: {detail}; rerun it or pass --force")]
    StaleArtifact { stage: String, detail: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 usage, 2 data, 3 dependency or stale artifact.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) => 1,
            Error::MissingArtifact { .. } | Error::StaleArtifact { .. } => 3,
            _ => 2,
        }
    }
}
