use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} lies outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid profile parameters: {0}")]
    InvalidProfile(String),

    #[error("construction invariant violated at n = {index}: {reason}")]
    Invariant { index: usize, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate continuum: {0}")]
    Degenerate(String),

    #[error("exhaustive search is limited to {limit} points, got {got}")]
    TooLarge { limit: usize, got: usize },

    #[error("curve leaves the grid box at {0:?}")]
    OutOfBox(Vec<f64>),

    #[error(
        "modulus solver stopped after {iterations} iterations without reaching tolerance \
         (best admissible energy {upper}, dual lower bound {lower})"
    )]
    NotConverged { iterations: usize, upper: f64, lower: f64 },
}

pub(crate) fn check_unit(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value,
            domain: "[0, 1]",
        })
    }
}
