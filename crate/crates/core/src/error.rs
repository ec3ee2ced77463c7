use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid value for `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },
    #[error("position ({x}, {y}) lies outside the height field")]
    OutOfBounds { x: f64, y: f64 },
    #[error("segment endpoints coincide")]
    ZeroLengthSegment,
    #[error("saturation may only be recorded for an infeasible edge")]
    NotInfeasible,
    #[error("unknown tree node {0}")]
    UnknownNode(u64),
    #[error("no local or global subgoal available")]
    NoSubgoal,
    #[error("heightmap parse error: {0}")]
    Heightmap(String),
    #[error("config parse error on line {line}: {reason}")]
    ConfigSyntax { line: usize, reason: String },
}

impl Error {
    pub(crate) fn config(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
