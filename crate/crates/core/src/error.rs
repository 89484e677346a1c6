use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value {value} at component {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("unsupported configuration: {0}")]
    Config(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("distance undefined: {0}")]
    EmptySet(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("evaluation failed at grid node {node}: {source}")]
    AtNode {
        node: usize,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad data or numeric input.
    Data,
    /// A configuration the library does not support.
    Usage,
    /// Work or memory guard tripped.
    Resource,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Constraint(_) => ErrorKind::Usage,
            Error::Resource(_) => ErrorKind::Resource,
            Error::AtNode { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}

pub(crate) fn check_point(dim: usize, x: &[f64]) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: x.len(),
        });
    }
    if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    Ok(())
}
