use thiserror::Error;

/// Errors raised by the engines, the oracle and the metrology layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a kernel.
    #[error("domain error: {0}")]
    Domain(String),

    /// A truncated Fock representation lost too much weight to its top shells.
    #[error("truncation error: leakage {leakage:.3e} exceeds tolerance {tolerance:.3e}")]
    Truncation { leakage: f64, tolerance: f64 },

    /// Requested dimensions exceed the configured memory budget.
    #[error("resource error: {0}")]
    Resource(String),

    /// A time-stepping run failed its own error estimate.
    #[error("accuracy error: estimated error {estimate:.3e} exceeds {limit:.3e}")]
    Accuracy { estimate: f64, limit: f64 },

    /// The error-propagation sensitivity diverges (zero slope).
    #[error("dead point: |dP/dOmega| vanishes at theta = {theta}")]
    DeadPoint { theta: f64 },

    /// The population is flat over the requested range, so candidates cannot be told apart.
    #[error("ambiguity unresolvable: {0}")]
    Unresolvable(String),

    /// Malformed sequence text, bad configuration values and the like.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A failure while executing element `index` of a pulse sequence.
    #[error("sequence element {index}: {source}")]
    Element {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips any [`Error::Element`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Element { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
