use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a documented constraint.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two particles sit on top of each other; the energy is +inf.
    #[error("degenerate configuration: points {i} and {j} coincide")]
    Degenerate { i: usize, j: usize },

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("eta too large: eta = {eta} but half the minimal gap is {half_gap}")]
    EtaTooLarge { eta: f64, half_gap: f64 },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("invalid input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
