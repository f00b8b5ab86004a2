use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {0} is not inside the unit disk")]
    OutsideDisk(String),

    #[error("operation undefined for the identity transformation")]
    IdentityMap,

    #[error("{what} out of range: {value} (allowed {allowed})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        allowed: String,
    },

    #[error("representation is not Fuchsian")]
    NotFuchsian,

    #[error("construction check failed: {0}")]
    Construction(String),

    #[error("element budget of {budget} exceeded while building depth {attempted}; completed depth {achieved}")]
    Resource {
        budget: usize,
        attempted: usize,
        achieved: usize,
    },

    #[error("degenerate triangle {index} (area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("ambiguous vertex merge near {0}: two candidates within tolerance")]
    MergeAmbiguity(String),

    #[error("ray terminated at t = {t}: Newton stalled with residual {residual:e}")]
    RayTerminated { t: f64, residual: f64 },

    #[error("eigensolver stagnated after {iterations} iterations (residual {residual:e})")]
    EigenStagnation { iterations: usize, residual: f64 },

    #[error("linear solve failed: {0}")]
    Linear(String),

    #[error("fit window [{lo}, {hi}] invalid: {reason}")]
    Window { lo: f64, hi: f64, reason: String },

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
