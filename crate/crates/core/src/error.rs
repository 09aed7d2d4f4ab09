use thiserror::Error;

/// Unified error type for the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    /// The requested ensemble has no diagonal spectrum representation.
    #[error("ensemble has a non-diagonal covariance; no spectrum is defined")]
    NotDiagonal,

    /// Rounded dimensions exceed the hard cap in `MAX_DIMENSION`.
    #[error("dimension overflow: d = {d} exceeds the maximum {max}")]
    Overflow { d: u128, max: usize },

    #[error("signal index t = {t} outside valid range 1..={max}")]
    InvalidSignal { t: usize, max: usize },

    #[error("index {index} out of range for dimension {len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// Gram matrix factorization failed even after the one-shot jitter retry.
    #[error("gram matrix not positive definite (condition estimate {cond_estimate:.3e})")]
    SingularGram { cond_estimate: f64 },

    /// Iteration cap hit; carries the best dual iterate found so callers can
    /// inspect or resume it.
    #[error("solver did not converge within {iterations} sweeps (kkt gap {kkt_gap:.3e})")]
    NotConverged { iterations: usize, kkt_gap: f64, best_beta: Box<[f64]> },

    /// Stationary dual iterate with margins still short of 1: no separating
    /// max-margin solution at the requested tolerance.
    #[error("margin constraints unsatisfiable: violation {violation:.3e} at a stationary point")]
    Infeasible { violation: f64 },

    /// A margin-based bound was requested for coefficients that misclassify
    /// at least one training point.
    #[error("coefficients do not separate the training set (min margin {min_margin:.3e})")]
    NotSeparating { min_margin: f64 },

    /// The parameter point sits on a regime boundary where no limit applies.
    #[error("parameter point lies on a regime boundary (q = {q})")]
    BoundaryCase { q: f64 },

    /// The requested classification bound only applies when its decay
    /// exponent is positive.
    #[error("bound undefined in this regime (exponent {exponent})")]
    InvalidRegime { exponent: f64 },

    /// Exponent fitting on inputs that cannot identify a slope.
    #[error("degenerate input for exponent fit: {0}")]
    DegenerateInput(String),

    /// Target vector has a nonzero grid mean; the constant feature aliases
    /// differently from the trigonometric ones, so such targets are rejected.
    #[error("target has nonzero grid mean {mean:.3e}")]
    NonzeroMean { mean: f64 },

    /// Regular trigonometric grids need an odd point count.
    #[error("grid size must be odd, got {n}")]
    EvenN { n: usize },

    /// A real Fourier basis (constant plus sin/cos pairs) has odd size.
    #[error("feature count must be odd, got {d}")]
    EvenD { d: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
