use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument outside the domain of a function (negative `s` for the
    /// cutoff, `p < 1` for a norm, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameter or control invariant violated.
    #[error("invalid {name}: {constraint}")]
    Invalid { name: &'static str, constraint: &'static str },

    /// `v` reached a nonpositive value where `1/v` is needed.
    #[error("singular taxis coefficient: v = {v} at cell {cell}")]
    Singular { cell: usize, v: f64 },

    /// Fields of different grids were combined.
    #[error("grid mismatch")]
    GridMismatch,

    /// The explicit stage would drive `u` negative at this step size.
    #[error("step rejected: dt = {dt} exceeds positivity limit {limit}")]
    PositivityRestriction { dt: f64, limit: f64 },

    /// The implicit solve produced negative `u` in `cells` cells.
    #[error("step rejected: {cells} cells with negative u")]
    NegativeDensity { cells: usize },

    #[error("step size underflow at t = {t}: dt = {dt} < dt_min = {dt_min}")]
    StepUnderflow { t: f64, dt: f64, dt_min: f64 },

    #[error("v degenerated at t = {t}: min v = {min_v} <= guard {guard}")]
    Degeneracy { t: f64, min_v: f64, guard: f64 },

    #[error("non-finite value at t = {t} in {field}")]
    NonFinite { t: f64, field: &'static str },

    #[error("linear solver stalled after {iterations} iterations (relative residual {residual})")]
    Solver { iterations: usize, residual: f64 },

    /// Misuse of an API on data that does not support the request.
    #[error("usage error: {0}")]
    Usage(String),
}

impl Error {
    /// Step-level failures that a smaller step can cure.
    pub fn is_rejection(&self) -> bool {
        matches!(
            self,
            Error::PositivityRestriction { .. } | Error::NegativeDensity { .. } | Error::Solver { .. }
        )
    }

    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepUnderflow { .. }
                | Error::Degeneracy { .. }
                | Error::NonFinite { .. }
                | Error::Solver { .. }
                | Error::Singular { .. }
        )
    }
}
