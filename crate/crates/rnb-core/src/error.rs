//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input contains NaN or infinite values.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Tensor shapes do not compose.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Weight entry outside the normalized [-1, 1] range.
    #[error("normalization error: {0}")]
    Normalization(String),

    /// Target transmission outside the range of the calibration curve.
    #[error("unreachable target: {0}")]
    UnreachableTarget(String),

    /// Tile programming target does not match the tile geometry.
    #[error("mapping error: {0}")]
    Mapping(String),

    /// Optical input outside the [0, 1] signaling range.
    #[error("encoding error: {0}")]
    Encoding(String),

    /// Reuse schedule references an incompatible or missing member.
    #[error("schedule error: {0}")]
    Schedule(String),

    /// Channel-shuffle group count does not divide the channel count.
    #[error("group error: {0}")]
    Group(String),

    /// Flattened-shuffle block size does not divide the element count.
    #[error("block error: {0}")]
    Block(String),

    /// Network description file violates the schema.
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    /// Training loss became non-finite.
    #[error("training diverged at epoch {epoch}: {message}")]
    Divergence { epoch: usize, message: String },

    /// Affine sweep fit needs at least two points.
    #[error("fit error: {0}")]
    Fit(String),

    /// Weights container is malformed or truncated.
    #[error("container error: {0}")]
    Container(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
