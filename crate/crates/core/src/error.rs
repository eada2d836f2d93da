use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("topology undefined: {0}")]
    TopologyUndefined(String),

    #[error("clip degenerate: {0}")]
    ClipDegenerate(String),

    #[error("orbit matching ambiguous at vertex {vertex} (group element {element})")]
    OrbitAmbiguous { vertex: usize, element: usize },

    #[error("mesh is not equivariant: vertex {vertex} has no image under group element {element}")]
    NotEquivariant { vertex: usize, element: usize },

    #[error("axis is tangent to triangle {0}")]
    AxisTangent(usize),

    #[error("seed geometry: {0}")]
    SeedGeometry(String),

    #[error("boundary vertex {0} sits at the origin; radial projection undefined")]
    ProjectionUndefined(usize),

    #[error("not clipped: boundary vertex {vertex} is {offset:e} off the clipping sphere")]
    NotClipped { vertex: usize, offset: f64 },

    #[error("line search stalled after {iteration} iterations")]
    Stalled {
        iteration: usize,
        trace: Box<crate::evolver::EvolveTrace>,
    },

    #[error("refinement stalled after {iteration} iterations (damping {damping:e})")]
    RefineStalled {
        iteration: usize,
        damping: f64,
        trace: Box<crate::evolver::EvolveTrace>,
    },

    #[error("topology drift: {before} -> {after}")]
    TopologyDrift { before: String, after: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        checkpoint: Option<std::path::PathBuf>,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stalled { .. } | Error::RefineStalled { .. } => 3,
            Error::TopologyDrift { .. } => 4,
            Error::Stage { source, .. } => source.exit_code(),
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
