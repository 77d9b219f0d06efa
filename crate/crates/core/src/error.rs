use std::fmt;

/// Errors raised by matrix construction, factorizations, and protocol setup.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes are incompatible with the requested operation.
    Dimension(String),
    /// A value was NaN or infinite where a finite number is required.
    NonFinite(String),
    /// A factorization met a pivot too small to divide through.
    Singular { pivot: f64 },
    /// The interval gramian could not be inverted. It is invertible exactly
    /// when the plant pair (A, B) is controllable and the interval length is
    /// nondegenerate.
    GramianSingular { pivot: f64 },
    /// An index lies outside its valid range.
    OutOfRange(String),
    /// A scalar argument lies outside the operation's domain.
    Domain(String),
    /// The communication graph has no directed spanning tree.
    NoSpanningTree,
    /// The pair (A, B) failed the controllability rank test.
    Uncontrollable,
    /// An iteration did not reach its tolerance within the step budget.
    NoConvergence(String),
    /// A closed-loop run failed; the message names the interval and length.
    Simulation(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            Error::Singular { pivot } => write!(
                f,
                "matrix is singular to working precision (failing pivot magnitude {pivot:.3e})"
            ),
            Error::GramianSingular { pivot } => write!(
                f,
                "interval gramian is singular (failing pivot magnitude {pivot:.3e}); \
                 it is invertible exactly when (A, B) is controllable and the interval \
                 length is positive and nondegenerate"
            ),
            Error::OutOfRange(msg) => write!(f, "index out of range: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::NoSpanningTree => write!(
                f,
                "the communication graph is not directed with a spanning tree, \
                 so no agent's information can reach every other agent"
            ),
            Error::Uncontrollable => {
                write!(f, "the plant pair (A, B) is not controllable")
            }
            Error::NoConvergence(msg) => write!(f, "iteration did not converge: {msg}"),
            Error::Simulation(msg) => write!(f, "simulation failed: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
