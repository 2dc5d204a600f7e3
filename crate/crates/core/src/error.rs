use std::io;

/// Errors produced by the library.
///
/// Input validation failures are grouped under [`Error::InvalidInput`];
/// numerical failures carry the bound that was actually reached so callers
/// can decide whether to retry with a looser tolerance.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    InvalidInput(String),

    #[error("zero ideal")]
    ZeroIdeal,

    #[error("character constraint system inconsistent")]
    InconsistentCharacter,

    #[error("character factorization not found: {0}")]
    Factorization(String),

    #[error("tolerance not achieved in {context}: requested {requested:e}, achieved {achieved:e}")]
    Tolerance {
        context: &'static str,
        requested: f64,
        achieved: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("decay certificate violated at t = {t}: |f| = {observed:e} > bound {bound:e}")]
    Certificate { t: f64, observed: f64, bound: f64 },

    #[error("coefficient sanity violated: a_{n} = {value}")]
    NegativeCoefficient { n: usize, value: i64 },

    #[error("indeterminate W: raise precision")]
    IndeterminateRootNumber,

    #[error("functional equation violated: solved W = {solved}")]
    FunctionalEquation { solved: f64 },

    #[error("R1 route mismatch: kernel route {kernel_route}, expansion route {expansion_route}")]
    RouteMismatch {
        kernel_route: f64,
        expansion_route: f64,
    },

    #[error("identity check failed: {0}")]
    IdentityMismatch(String),

    #[error("malformed character blob: {0}")]
    Blob(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures caused by a numerical budget rather than bad input.
    pub fn is_tolerance_failure(&self) -> bool {
        matches!(
            self,
            Error::Tolerance { .. } | Error::IndeterminateRootNumber | Error::Certificate { .. }
        )
    }

    pub fn is_invalid_input(&self) -> bool {
        matches!(self, Error::InvalidInput(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
