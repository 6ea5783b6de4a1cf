//! Crate-wide error type.
//!
//! Every fallible public operation returns [`Error`]; the CLI maps the
//! variants onto process exit codes (`2` for configuration/validation
//! problems, `3` for solver nonconvergence).

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for geometry, material, assembly and solver failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parametric or physical coordinate lies outside its admissible range.
    #[error("coordinate out of range: {0}")]
    OutOfRange(String),

    /// A derivative order beyond what the basis supports was requested.
    #[error("unsupported derivative order {requested} (degree {degree})")]
    UnsupportedOrder { requested: usize, degree: usize },

    /// Knot vector or control net violates a structural invariant.
    #[error("invalid patch data: {0}")]
    InvalidPatch(String),

    /// The geometry map is (numerically) singular at an evaluation point.
    #[error("singular geometry mapping at (ξ,η) = ({xi}, {eta}); |det J| = {det}")]
    SingularMapping { xi: f64, eta: f64, det: f64 },

    /// Material constants violate thermodynamic admissibility.
    #[error("inadmissible material: {0}")]
    InvalidMaterial(String),

    /// Layer stack does not tile the thickness, or is otherwise malformed.
    #[error("invalid laminate: {0}")]
    InvalidLaminate(String),

    /// Requested operation is not available for this input (e.g. degree
    /// elevation of an already-refined patch).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Boundary-condition preset incompatible with the geometry.
    #[error("invalid boundary conditions: {0}")]
    InvalidBoundary(String),

    /// A global matrix turned out singular where a solution was required.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// Iterative solution failed to reach the convergence tolerance.
    #[error("no convergence: {context} (last relative increment {last_error:.3e} after {iterations} iterations)")]
    Nonconvergence {
        context: String,
        iterations: usize,
        last_error: f64,
    },

    /// Problem configuration failed schema or semantic validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Mismatched dimensions between run-time objects; indicates a caller bug.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Input/output failure while reading configs or writing results.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
