use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The bound machinery only applies for `alpha > 2D + 1`.
    #[error("out of regime: alpha = {alpha} must exceed 2D+1 = {threshold}")]
    OutOfRegime { alpha: f64, threshold: f64 },

    #[error("out of regime: {0}")]
    Regime(String),

    #[error("resource limit: {sites} sites exceed the cap of {cap} (dimension 2^{sites} = {dim})")]
    ResourceLimit { sites: usize, cap: usize, dim: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
