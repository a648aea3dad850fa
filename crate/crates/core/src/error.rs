use crate::lattice::LatticeCoord;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("site {0:?} is outside the field domain")]
    OutOfDomain(LatticeCoord),

    #[error("region is not covered by the field domain (missing {0:?})")]
    RegionNotCovered(LatticeCoord),

    #[error("invalid process config: {0}")]
    InvalidConfig(String),

    #[error("invalid estimator input: {0}")]
    InvalidEstimate(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("image encoding failed: {0}")]
    Image(String),
}
