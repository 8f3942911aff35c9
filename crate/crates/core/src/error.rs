use thiserror::Error;

/// Failure modes shared by every stage of the pipeline.
///
/// The CLI maps `Input` to exit code 2 and everything else to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("branch points {} and {} are closer than {eps:e}", .i + 1, .j + 1)]
    DegenerateCurve { i: usize, j: usize, eps: f64 },

    #[error("path passes within {dist:e} of branch point {index} at z = {at}")]
    PathTooClose { index: usize, dist: f64, at: num_complex::Complex64 },

    #[error("analytic continuation stalled near z = {at}: {reason}")]
    Continuation { at: num_complex::Complex64, reason: String },

    #[error("quadrature did not converge: error estimate {estimate:e} after {panels} panels")]
    Quadrature { estimate: f64, panels: usize },

    #[error("homology construction failed: {0}")]
    Homology(String),

    #[error("period matrix rejected: {0}")]
    Periods(String),

    #[error("theta evaluation failed: {0}")]
    Theta(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn is_input(&self) -> bool {
        matches!(self, Error::Input(_) | Error::DegenerateCurve { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
