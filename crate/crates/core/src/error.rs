use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("group index {got} out of range (m = {m})")]
    GroupOutOfRange { got: usize, m: usize },

    #[error("operation requires m = {required} groups, dataset has m = {got}")]
    UnsupportedGroupCount { required: usize, got: usize },

    #[error("cluster {cluster} has zero weight for every present group")]
    DegenerateCluster { cluster: usize },

    #[error("centers are not on Z (stationarity residual {residual:.3e} > {tolerance:.1e}); lower bound would be unsound")]
    InvalidCertificate { residual: f64, tolerance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
