use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("pixel {id} out of range for a partition of {n_pix} pixels")]
    PixelOutOfRange { id: usize, n_pix: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("solids exceed the grid: {0}")]
    SolidsExceedGrid(String),

    #[error("overlapping solids: {0}")]
    Overlap(String),

    #[error("empty region: {0}")]
    EmptyRegion(&'static str),

    #[error("no candidate poses remain")]
    NoCandidates,

    #[error("scout scan acquired no images")]
    EmptyScout,

    #[error("profile error: {0}")]
    Profile(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
