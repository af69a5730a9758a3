use thiserror::Error;

/// Failures raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("polynomial degree {0} exceeds the supported limit of {max}", max = crate::poly::MAX_DEGREE)]
    DegreeTooLarge(usize),
    #[error("iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("derivative vanishes identically")]
    DegenerateDerivative,
    #[error("division by a jet with vanishing constant term")]
    DivisionBySingular,
    #[error("unknown analytic family `{0}`")]
    UnknownFamily(alloc::string::String),
    #[error("iterate order {requested} exceeds the limit {limit}")]
    OrderOverflow { requested: usize, limit: usize },
    #[error("seed path from zero escaped (reached a critical point or left the bounding box)")]
    SeedEscape,
    #[error("level {t} lies within {band} of the critical value {critical}")]
    NearCriticalValue { t: f64, critical: f64, band: f64 },
    #[error("level-curve integration diverged: {0}")]
    TraceDivergence(&'static str),
    #[error("integrand has a pole on the contour")]
    PoleOnContour,
    #[error("sample points straddle the critical value {0}")]
    MixedIntervals(f64),
    #[error("Laurent truncation bound {bound} exceeds tolerance {tolerance}")]
    TailTooFat { bound: f64, tolerance: f64 },
    #[error("hypergeometric series diverges at x = 1 (c - a - b = {0} <= 0)")]
    DivergesAtOne(f64),
    #[error("hypergeometric series converges too slowly at x = {0}")]
    SlowConvergence(f64),
}

pub type Result<T> = core::result::Result<T, Error>;
