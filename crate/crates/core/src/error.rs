use thiserror::Error;

/// Errors raised by the solver core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value for {what}")]
    NonFinite { what: &'static str },
    #[error("{what} must be positive (got {value})")]
    NotPositive { what: &'static str, value: f64 },
    #[error("voigt matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("{what} is not positive definite (eigenvalue ratio {ratio:e})")]
    NotPositiveDefinite { what: &'static str, ratio: f64 },
    #[error("{what} is not positive semi-definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemiDefinite { what: &'static str, min_eigenvalue: f64 },
    #[error("tensor index ({i}, {j}, {k}, {l}) out of range 1..=3")]
    IndexOutOfRange { i: usize, j: usize, k: usize, l: usize },
    #[error("direction is not a unit vector (norm {norm})")]
    NotUnitDirection { norm: f64 },
    #[error("christoffel matrix not positive definite along ({:.4}, {:.4}, {:.4})", direction[0], direction[1], direction[2])]
    ChristoffelNotPositive { direction: [f64; 3] },
    #[error("direction sampling needs at least 26 samples (got {0})")]
    TooFewSamples(usize),
    #[error("reflection target must lie in (0, 1] (got {0})")]
    ReflectionOutOfRange(f64),
    #[error("coordinate {x} outside the computational domain (|x| <= {limit})")]
    OutsideDomain { x: f64, limit: f64 },
    #[error("axis {0} out of range 1..=3")]
    AxisOutOfRange(usize),
    #[error("invalid PML profile: {0}")]
    InvalidProfile(&'static str),
    #[error("PML profile does not match grid: {0}")]
    GeometryMismatch(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("node ({}, {}, {}) has no one-cell halo", node[0], node[1], node[2])]
    NoHalo { node: [usize; 3] },
    #[error("invalid source: {0}")]
    InvalidSource(&'static str),
    #[error("source {0}")]
    SourceInPml(&'static str),
    #[error("time step {dt:e} s violates the {bound} bound {limit:e} s")]
    TimeStepTooLarge { dt: f64, limit: f64, bound: &'static str },
    #[error("viscoelastic mode requires a viscosity tensor")]
    MissingViscosity,
    #[error("instability at step {step}: non-finite {field} at node ({}, {}, {})", node[0], node[1], node[2])]
    Unstable { step: u64, field: &'static str, node: [usize; 3] },
    #[error("empty energy trace")]
    EmptyTrace,
    #[error("reference margin of {margin_cells} cells is not causally sufficient (need {required_cells})")]
    CausalityViolated { margin_cells: usize, required_cells: usize },
    #[error("field shape does not match grid")]
    ShapeMismatch,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
