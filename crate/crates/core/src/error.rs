use thiserror::Error;

/// Errors produced by the numerical layers.
///
/// The CLI maps `Input`/`Constraint`/`UnsupportedDomain`/`Singularity`
/// to exit code 2 and `Numeric`/`Inconclusive` to exit code 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),
    #[error("singular point: {0}")]
    Singularity(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

impl Error {
    /// True for errors caused by the caller's arguments rather than the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Input(_) | Error::Constraint(_) | Error::UnsupportedDomain(_) | Error::Singularity(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::Input(format!("dimension N={n} must be at least 3")));
    }
    Ok(())
}

pub(crate) fn check_point(n: usize, x: &[f64], what: &str) -> Result<()> {
    if x.len() != n {
        return Err(Error::Input(format!(
            "{what} has {} coordinates, expected {n}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input(format!("{what} has non-finite coordinates")));
    }
    Ok(())
}
