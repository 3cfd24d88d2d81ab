use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("interface alignment violated: {0}")]
    AlignmentViolation(String),

    #[error("malformed mesh: {0}")]
    InvalidMesh(String),

    #[error("element {0} is not an axis-aligned rectangle")]
    UnsupportedElement(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("face {0} is not an interface face")]
    NotInterfaceFace(usize),

    #[error("singular mass matrix")]
    SingularMass,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point ({0}, {1}) lies outside the domain")]
    OutsideDomain(f64, f64),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("surface current has zero L2 norm and cannot be normalized")]
    DegenerateNormalization,

    #[error("instability at t = {time}: state norm {norm:e} (initial {initial:e})")]
    Unstable { time: f64, norm: f64, initial: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
