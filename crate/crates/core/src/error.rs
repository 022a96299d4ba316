use thiserror::Error;

/// Errors raised anywhere in the planning pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("grid too large: {voxels} voxels exceeds cap {cap}")]
    GridTooLarge { voxels: usize, cap: usize },
    #[error("out of bounds: {0}")]
    OutOfBounds(String),
    #[error("endpoint in collision")]
    EndpointInCollision,
    #[error("unreachable")]
    Unreachable,
    #[error("degenerate cloud")]
    DegenerateCloud,
    #[error("insufficient neighborhood: k = {0}, need at least 3")]
    InsufficientNeighborhood(usize),
    #[error("skeleton collapsed: {0} vertices survived")]
    SkeletonCollapsed(usize),
    #[error("empty graph")]
    EmptyGraph,
    #[error("instance too large for oracle: n = {0}")]
    OracleTooLarge(usize),
    #[error("infeasible")]
    Infeasible,
    #[error("unreachable viewpoint pair ({0}, {1})")]
    UnreachableViewpoint(usize, usize),
    #[error("corridor failure: {0}")]
    CorridorFailure(String),
    #[error("trajectory failure: {0}")]
    TrajectoryFailure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidParameter(_) | Error::Parse { .. } | Error::Config(_) | Error::EmptyInput => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
