use thiserror::Error;

/// Errors raised across the library.
///
/// Every variant maps onto one of the CLI exit codes, see [`Error::exit_code`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The caller handed in a value outside an operation's precondition.
    #[error("rejected input: {0}")]
    InvalidInput(String),

    /// A domain, pair, or experiment description is inconsistent or unsupported.
    #[error("configuration error: {0}")]
    Config(String),

    /// A solver (projection, link inversion, quadrature) failed to converge
    /// or left the region where it is defined.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A verification step ran to completion but its criterion did not hold.
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Config(_) => 1,
            Error::Numerical(_) => 2,
            Error::CheckFailed(_) => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::invalid(format!(
            "{what}: dimension {got} does not match expected {want}"
        )));
    }
    Ok(())
}

pub(crate) fn check_finite(what: &str, v: &[f64]) -> Result<()> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::invalid(format!(
            "{what}: entry {i} is not finite ({})",
            v[i]
        )));
    }
    Ok(())
}
