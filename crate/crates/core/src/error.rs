use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("Λ^α with α < 0 is undefined on the ξ = 0 mode; field is not mean-zero")]
    NotMeanZero,

    #[error("field is not divergence-free (max |ξ·û| = {divergence:e}, relative {relative:e})")]
    NotDivergenceFree { divergence: f64, relative: f64 },

    #[error("symbol grid too coarse: Ξmax = {available} but e^(-tΞ^γ) < 1e-16 requires Ξmax ≥ {required}")]
    SymbolGridTooCoarse { required: f64, available: f64 },

    #[error("kernel table extent {extent} < 8: tail not observable")]
    TableTooSmall { extent: f64 },

    #[error("kernel table must be sampled at t = 1 (got t = {t})")]
    TableNotUnitTime { t: f64 },

    #[error("stable quadrature with {node_count} nodes misses the Laplace identity by {error:e}; use more nodes")]
    QuadratureTolerance { node_count: usize, error: f64 },

    #[error("stable quadrature index {found} does not match γ/2 = {expected}")]
    StableIndexMismatch { expected: f64, found: f64 },

    #[error("Picard iteration did not converge after {iterations} iterations (update norms {history:?})")]
    PicardDiverged { iterations: usize, history: Vec<f64> },

    #[error("solution became non-finite or exceeded the energy bound after t = {last_valid_time}")]
    Blowup { last_valid_time: f64 },

    #[error("radius fit failed: {0}")]
    RadiusFit(String),

    #[error("no measurable radius growth over r0 = {r0} at t = {time}")]
    NoGrowth { r0: f64, time: f64 },

    #[error("trajectory carries no L^{q} norm series and no snapshots")]
    MissingNorm { q: f64 },

    #[error("exponent q = {q} outside ({lower}, ∞]")]
    ExponentOutOfRange { q: f64, lower: f64 },

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        value,
        reason,
    }
}
