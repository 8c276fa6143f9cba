use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular evaluation point: {0}")]
    Singularity(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("ill-conditioned two-point system: |sin(kappa*tau)| = {sin_kt:.3e}")]
    Conditioning { sin_kt: f64 },

    #[error("multipole conversion did not converge below tolerance by order {max_order}")]
    Truncation { max_order: usize },

    #[error("rank-deficient design matrix (condition number {cond:.3e})")]
    RankDeficient { cond: f64 },

    #[error("order mismatch: {0}")]
    OrderMismatch(String),

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("target too close to the line: distance {distance:.4e} < {min:.4e}")]
    Proximity { distance: f64, min: f64 },

    #[error("Lippmann-Schwinger system is singular or ill-conditioned (estimate {cond:.3e})")]
    SingularSystem { cond: f64 },

    #[error("missing sample: {0}")]
    MissingSample(String),

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps the error with the pipeline stage it came from.
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Validation(_) | Error::Json(_) | Error::Geometry(_) => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
