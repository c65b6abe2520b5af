use thiserror::Error;

/// Failures reported by the map, threshold, continuation and flow routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("singular derivative at x = {x}")]
    SingularDerivative { x: f64 },
    #[error("derivative undefined at gap point x = {x}")]
    Undefined { x: f64 },
    #[error("no ({p},{q}) periodic orbit found")]
    NotFound { p: i64, q: u32 },
    #[error("iteration did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("no threshold intersection within horizon {horizon} from x = {x}")]
    NoIntersection { x: f64, horizon: f64 },
    #[error("argument outside domain: {0}")]
    DomainError(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("no multi-gap wedge for alpha = {alpha}, gamma = {gamma}")]
    NoWedge { alpha: f64, gamma: f64 },
    #[error("codimension-two crossing not found: {0}")]
    CrossingNotFound(String),
    #[error("continuation seed did not converge: {0}")]
    SeedFailure(String),
    #[error("map has no gap in the requested window")]
    NoGap,
    #[error("unrecognized bifurcation sequence: {0}")]
    UnrecognizedSequence(String),
    #[error("parameter constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("trajectory absorbed by an equilibrium near ({x}, {y})")]
    StuckAtEquilibrium { x: f64, y: f64 },
    #[error("time budget {t_max} exceeded")]
    TimeBudgetExceeded { t_max: f64 },
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),
}

pub type Result<T> = std::result::Result<T, Error>;
