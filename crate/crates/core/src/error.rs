use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("unsupported branch configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("quadrature path error: {0}")]
    QuadraturePath(String),

    #[error(
        "invalid period data: |Pi J Pi^T| = {riemann_sym:.3e}, min eigenvalue of positivity form = {min_positivity:.3e}"
    )]
    InvalidPeriodData {
        riemann_sym: f64,
        min_positivity: f64,
    },

    #[error("orientation error: {0}")]
    Orientation(String),

    #[error("stencil too coarse: {0}")]
    StencilTooCoarse(String),

    #[error("ill-conditioned Gram matrix at base point (condition number {0:.3e})")]
    Conditioning(f64),

    #[error("accuracy: {0}")]
    Accuracy(String),

    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {residual:.3e})")]
    Solver {
        iterations: usize,
        residual: f64,
        trace: Vec<f64>,
    },

    #[error("internal error: {0}")]
    Internal(String),
}
