use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("domain too small: potential `{potential}` needs half_width >= {required_half_width:.3} (have {half_width:.3})")]
    DomainTooSmall {
        potential: String,
        half_width: f64,
        required_half_width: f64,
    },

    #[error("potential `{potential}` under-resolved: analytic and spectral derivatives differ by {relative_error:.3e} (relative)")]
    UnderResolved {
        potential: String,
        relative_error: f64,
    },

    #[error("time {t} exceeds the wraparound horizon T_wrap = {horizon:.6}")]
    UntrustedWindow { t: f64, horizon: f64 },

    #[error("Jost solution magnitude exceeded {limit:e} at x = {x:.4}")]
    Overflow { x: f64, limit: f64 },

    #[error("blow-up suspected: sup-norm {sup_norm:e} at t = {t:.6}")]
    BlowUpSuspected { t: f64, sup_norm: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("cutoff radius {radius} needs 2R < half_width = {half_width}")]
    CutoffExceedsBox { radius: f64, half_width: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("alpha = {0} is out of range (need alpha > 4)")]
    OutOfRange(f64),
}
