use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} is undefined for q = {q} (requires {requirement})")]
    UndefinedBarrier {
        what: &'static str,
        q: f64,
        requirement: &'static str,
    },

    #[error("point r = {r} is outside the domain [0, {limit})")]
    Domain { r: f64, limit: f64 },

    #[error("support radius {radius} is not resolvable on a grid with h = {h} (need at least 4h)")]
    Unresolvable { radius: f64, h: f64 },

    #[error("tridiagonal solve broke down at row {row}")]
    SingularSystem { row: usize },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    MaxStepsExceeded { max_steps: usize, t: f64 },

    #[error("cap schedule exhausted without saturation (last sup-difference {last_diff:e})")]
    ScheduleExhausted { last_diff: f64 },

    #[error("config line {line}: {reason}")]
    ConfigSyntax { line: usize, reason: String },

    #[error("config key `{key}`: {reason}")]
    ConfigValue { key: String, reason: String },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
