use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// The two levels hosting the transfer are not cleanly separated from the
    /// rest of the spectrum.
    #[error("doublet not resolved for sites {from} -> {to}: purity {purity:.4}")]
    DoubletNotResolved {
        from: usize,
        to: usize,
        purity: f64,
    },

    #[error("closed form inapplicable: {0}")]
    ClosedFormInapplicable(String),

    #[error("numerical invariant violated: {0}")]
    InvariantViolation(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
