use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received an out-of-range parameter.
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// Subset-sum operation asked for a configuration above its cap.
    #[error("configuration of {len} points exceeds the cap of {cap} for {op}")]
    CardinalityCap {
        op: &'static str,
        len: usize,
        cap: usize,
    },

    /// Quadrature grid does not resolve the active kernel widths.
    #[error("grid spacing {spacing} too coarse: need at least {required} points per width {width}")]
    GridResolution {
        spacing: f64,
        width: f64,
        required: usize,
    },

    /// Series truncation bound exceeds the requested tolerance.
    #[error("series truncation bound {bound} exceeds requested tolerance {tol}")]
    TruncationBound { bound: f64, tol: f64 },

    /// Grids of two fields (or a field and a reference) do not match.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Iterative solve failed to reach tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Time stepping produced a non-finite or exploding field.
    #[error("integration unstable at t = {t}: {message}")]
    Unstable { t: f64, message: String },

    /// Density input violated nonnegativity beyond round-off.
    #[error("negative density {value} at index {index} (tolerance {tol})")]
    NegativeDensity { value: f64, index: usize, tol: f64 },

    /// The contraction machinery needs a strictly positive jump constant.
    #[error("horizon requires <c2> > 0: the weighted norm and the bound h >= <c2> degenerate at zero")]
    ZeroJumpIntensity,

    /// Root bracketing failed to find a sign change.
    #[error("no sign change found while bracketing {what} (searched up to t = {upper})")]
    BracketFailure { what: &'static str, upper: f64 },

    /// Expected particle count exceeds the configured cap.
    #[error("expected particle count {expected:.1} exceeds cap {cap}")]
    ParticleCap { expected: f64, cap: usize },

    /// Operation on an empty particle state.
    #[error("operation requires a nonempty particle state")]
    EmptyState,

    /// A ratio with a vanishing denominator was requested.
    #[error("zero denominator: {0}")]
    ZeroDenominator(&'static str),

    /// Input collection was empty where at least one element is needed.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}
