use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {arg} = {value} outside the domain {domain}")]
    Domain {
        arg: &'static str,
        value: f64,
        domain: String,
    },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("cube {corner:?} of side {side} contains no point")]
    EmptyCube { corner: Vec<i64>, side: i64 },
    #[error("construction needs depth {needed}, above the configured maximum {max}")]
    DepthOverflow { needed: u32, max: u32 },
    #[error("ratio {alpha} cannot be realised by a single box map")]
    SplitRequired { alpha: f64 },
    #[error("box map for ratio {alpha} has a non-positive triangle")]
    DegenerateFan { alpha: f64 },
    #[error("point {0:?} lies outside the window")]
    OutOfWindow(Vec<f64>),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("hypothesis gate failed at index {index}: {detail}")]
    GateFailed { index: usize, detail: String },
    #[error("no finite repetitivity radius inside the window")]
    NotFound,
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParam(msg.into()))
}
