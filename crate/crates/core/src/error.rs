use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Numeric payloads are carried as `f64` regardless of the working scalar
/// so the error type stays non-generic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("accuracy target not met: certified bound {achieved:e} exceeds {target:e}")]
    Accuracy { achieved: f64, target: f64 },

    #[error("invalid fractional order {0}: q must lie in (0,1]")]
    Order(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid impulse schedule: {0}")]
    Schedule(String),

    #[error("index {index} out of range (valid: {valid})")]
    Index { index: usize, valid: String },

    #[error("empty sample set")]
    EmptySamples,

    #[error("time {0} lies beyond trajectory coverage")]
    Coverage(f64),

    #[error("control law does not match the solver grid: {0}")]
    ControlShape(String),

    #[error("quadrature weight underflow: {0}")]
    WeightUnderflow(String),

    #[error(
        "Picard iteration did not converge after {iterations} iterations \
         (last residual {residual:e}); M*beta = {m_beta:e}, contraction conditions satisfied: {contraction_ok}"
    )]
    PicardDiverged {
        iterations: usize,
        residual: f64,
        m_beta: f64,
        contraction_ok: bool,
    },

    #[error(
        "Grammian diverges for q = {0}: the kernel (t_k - s)^(2q-2) is not integrable unless q > 1/2"
    )]
    DivergentGrammian(f64),

    #[error("matrix is not positive definite or is singular: {0}")]
    Singular(String),

    #[error("closed-loop fixed point did not converge after {iterations} iterations (last update {update:e})")]
    ClosedLoopDiverged { iterations: usize, update: f64 },

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("brute-force grid has {0} candidates, above the limit of 1000000")]
    GridTooLarge(u128),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
