use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Library error type. Numeric payloads are carried as `f64` regardless of
/// the scalar type the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument failed validation (bad parameter range, inconsistent lengths, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An operation that needs data received none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A NaN or infinity showed up where a finite value is required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Labeled data is missing one of the two classes.
    #[error("missing class: {0}")]
    ClassMissing(&'static str),

    /// A denominator is too close to zero for the result to mean anything.
    #[error("degenerate denominator in {context}: {value:e}")]
    DegenerateDenominator { context: &'static str, value: f64 },

    /// Both class densities vanish at a score, so no posterior exists there.
    #[error("both class densities are zero at score {score}")]
    ZeroDensity { score: f64 },

    /// No candidate threshold clears the sweep admissibility bound.
    #[error("no admissible thresholds: p_delta = {p_delta} but the largest rate gap is {max_gap}")]
    NoAdmissibleThresholds { p_delta: f64, max_gap: f64 },

    /// The requested inclusion bound meets or exceeds the peak rate gap.
    #[error("no threshold window: p_delta = {p_delta} must lie below the maximum rate gap {max_gap}")]
    WindowUndefined { p_delta: f64, max_gap: f64 },

    /// The rate gap dips below the bound inside the window, so the two
    /// boundary crossings do not delimit a valid interval.
    #[error("rate gap is not unimodal: dips below p_delta = {p_delta} between its boundary crossings")]
    GapNotUnimodal { p_delta: f64 },

    /// A root or extremum bracket could not be established.
    #[error("bracketing failed: {0}")]
    BracketingFailed(&'static str),

    /// Quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge ({context}); error estimate {error_estimate:e}")]
    QuadratureDidNotConverge { context: String, error_estimate: f64 },

    /// Likelihood optimization stopped without meeting its convergence
    /// criteria; the best parameters seen so far are attached.
    #[error("{family} fit did not converge; best log-likelihood {log_likelihood} at {best:?}")]
    FitDidNotConverge { family: &'static str, best: [f64; 3], log_likelihood: f64 },

    /// The threshold optimizer failed; the sampled variance curve is attached
    /// for diagnosis.
    #[error("optimization failed: {context}")]
    OptimizationFailed { context: String, curve: Vec<(f64, f64)> },

    /// Histograms that must share bin edges do not.
    #[error("histogram mismatch: {0}")]
    HistogramMismatch(&'static str),

    /// Filesystem failure, wrapped as text so the error stays cloneable.
    #[error("io error: {0}")]
    Io(String),

    /// A data or config file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
