use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("coincident nodes {0} and {1}: overlap geometry is undefined")]
    CoincidentNodes(u32, u32),

    #[error("nodes {0} and {1} do not overlap")]
    NoOverlap(u32, u32),

    #[error("ill-conditioned channel (reciprocal condition {rcond:e} below {threshold:e})")]
    IllConditioned { rcond: f64, threshold: f64 },

    #[error("coupled driver equations have no unique solution (reciprocal condition {rcond:e})")]
    NoUniqueSolution { rcond: f64 },

    #[error("degenerate normalization: sum of squared norms {0:e} is too small")]
    DegenerateNormalization(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that come from the numerics of a single trial
    /// (counted as erasures by the link simulator).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IllConditioned { .. }
                | Error::NoUniqueSolution { .. }
                | Error::DegenerateNormalization(_)
        )
    }
}
