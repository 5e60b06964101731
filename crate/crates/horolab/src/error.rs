use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configured budget would be exceeded.
    #[error("resource limit: {what} needs {needed}, budget is {budget}")]
    Resource { what: String, needed: f64, budget: f64 },
    /// The requested configuration is deliberately not supported.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// An iterative method failed to converge or produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Too little usable data for a fit.
    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn resource<T>(what: impl Into<String>, needed: f64, budget: f64) -> Result<T> {
    Err(Error::Resource {
        what: what.into(),
        needed,
        budget,
    })
}
