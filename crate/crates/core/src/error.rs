use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid hypergraph: {0}")]
    InvalidHypergraph(String),
    #[error("invalid tree decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("invalid elimination forest: {0}")]
    InvalidForest(String),
    #[error("{what} is {size}, above the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },
    #[error("unknown width function `{0}`")]
    UnknownFunction(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("formula error: {0}")]
    Formula(String),
    #[error("invariant failure: {0}")]
    Invariant(String),
}

impl Error {
    /// Invariant failures are findings against the theory, not user errors.
    pub fn is_invariant_failure(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn cap(what: &'static str, size: usize, cap: usize) -> Result<()> {
    if size > cap {
        Err(Error::CapExceeded { what, size, cap })
    } else {
        Ok(())
    }
}
