use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),

    #[error("field shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unsupported norm {order} for {field}")]
    UnsupportedNorm { order: &'static str, field: &'static str },

    #[error(
        "time step {dt:e} violates the stability guard dt <= {bound:e} (0.25 * h^2 * min(1/nu, 1/eta))"
    )]
    StepTooLarge { dt: f64, bound: f64 },

    #[error(
        "initial director trace does not match the control at t=0: max mismatch {mismatch:e} at boundary node {node}"
    )]
    Compatibility { node: usize, mismatch: f64 },

    #[error("non-finite value in {field}")]
    NonFinite { field: &'static str },

    #[error("linear solve failed in {context}: residual {residual:e}")]
    SolveFailed { context: &'static str, residual: f64 },

    #[error("control deviation must vanish at t=0 (max |xi(0)| = {0:e})")]
    NonZeroInitialDeviation(f64),

    #[error(
        "terminal director target violates the trace condition: max |d(T) - d_Omega| on the boundary = {0:e}"
    )]
    TerminalTrace(f64),

    #[error("invalid cost specification: {0}")]
    InvalidCost(String),

    #[error("trajectory mismatch: {0}")]
    TrajectoryMismatch(String),

    #[error("{0}")]
    Config(String),

    #[error("time level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_level(self, level: usize) -> Self {
        match self {
            e @ Error::AtLevel { .. } => e,
            e => Error::AtLevel {
                level,
                source: Box::new(e),
            },
        }
    }

    /// True for failures that originate in the numerics rather than in the
    /// user's input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFinite { .. } | Error::SolveFailed { .. } => true,
            Error::AtLevel { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
