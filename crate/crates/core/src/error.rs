//! Error taxonomy shared by every module in the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by model synthesis, decompositions, and subspace recovery.
///
/// Computational *warnings* (for example an ill-posed nullspace split) are not
/// errors; they travel inside result types so callers can inspect them without
/// losing the computed output.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Incompatible or out-of-range shapes, widths, or counts.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A NaN or infinite entry reached a numerical operation.
    #[error("non-finite entry {value} at ({row}, {col}) in {context}")]
    NonFinite {
        context: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    /// The iterative singular-value solver ran out of its iteration budget.
    #[error(
        "svd did not converge within {max_iterations} iterations: \
         achieved relative residual {achieved:.3e}, required {required:.3e}"
    )]
    Convergence {
        max_iterations: usize,
        achieved: f64,
        required: f64,
    },

    /// Random factors stayed rank deficient after every regeneration attempt.
    #[error("degenerate sample: factors remained rank deficient after {attempts} attempts")]
    DegenerateSample { attempts: usize },

    /// Noise scaling is undefined because every view is identically zero.
    #[error("signal power error: all views are zero, SNR scaling is undefined")]
    SignalPower,

    /// A view or factor does not carry enough rank for the requested output.
    #[error("rank error: {0}")]
    Rank(String),

    /// A scalar argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
