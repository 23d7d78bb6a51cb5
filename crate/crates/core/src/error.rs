use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("time {t} is not on the grid (t0 = {t0}, dt = {dt})")]
    GridMismatch { t: f64, t0: f64, dt: f64 },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("series did not converge after {terms} terms (last term {last_term:e})")]
    SeriesNotConverged { terms: usize, last_term: f64 },

    #[error("quadrature did not reach tolerance: estimate {value:e}, error {error:e}")]
    QuadratureNotConverged { value: f64, error: f64 },

    #[error("unsupported regime: {0}")]
    Unsupported(String),

    #[error("truncation mismatch: {left} vs {right} modes")]
    TruncationMismatch { left: usize, right: usize },

    #[error("index {index} out of range for {what} (count {count})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        count: usize,
    },

    #[error(
        "delay bound 0 <= delta(t) <= t violated by {kind} delay {channel} ({name}) at t = {t}: delta(t) = {value}"
    )]
    DelayBound {
        kind: &'static str,
        channel: usize,
        name: String,
        t: f64,
        value: f64,
    },

    #[error("nonlinearity bound ||F|| <= sum N_delta violated: ||F|| = {norm:e} > {bound:e} at t = {t}")]
    NonlinearityBound { norm: f64, bound: f64, t: f64 },

    #[error("model validation failed: {0}")]
    Model(String),

    #[error("no control channel configured")]
    NoControlChannel,

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("Picard iteration did not contract: {iterations} iterations, last change {residual:e}")]
    NonContraction { iterations: usize, residual: f64 },

    #[error("closed-loop iteration diverged after {iterations} iterations (last change {last:e})")]
    OuterDivergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("unknown {kind} strategy '{name}' (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("bad descriptor '{0}'")]
    BadDescriptor(String),

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("config key '{key}': {message}")]
    ConfigValue { key: String, message: String },
}
