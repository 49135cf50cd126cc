use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("stencil radius ratio r/h = {ratio} exceeds the cap of {cap}")]
    StencilTooLarge { ratio: f64, cap: f64 },

    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("masks or fields live on incompatible geometries")]
    IncompatibleGeometry,

    #[error("operation needs matching exterior rules on both masks")]
    IncompatibleExtension,

    #[error("the extended set is empty")]
    EmptySet,

    #[error("operation not supported on sheared periodic geometries: {0}")]
    Unsupported(&'static str),

    #[error("cube side rounds below one cell (r = {r}, h = {h})")]
    CubeTooSmall { r: f64, h: f64 },

    #[error("field has {levels} distinct levels, at most {cap} allowed")]
    TooManyLevels { levels: usize, cap: usize },

    #[error("invalid Dirichlet data: {0}")]
    InvalidSpec(String),

    #[error("total scaled capacity overflows the integer range")]
    CapacityOverflow,

    #[error("{free} free cells exceed the brute-force cap of {cap}")]
    TooLarge { free: usize, cap: usize },

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
