use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors reported by the simulation kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two operands had incompatible dimensions.
    DimensionMismatch { expected: usize, found: usize },
    /// A vector length was not a perfect square (vectorized density matrix).
    NotPerfectSquare { len: usize },
    /// An operator required to be Hermitian was not; `defect` is the largest
    /// entrywise |A − A†|.
    NotHermitian { what: &'static str, defect: f64 },
    /// An iterative kernel failed to converge.
    NonConvergence(&'static str),
    /// No vector with residual below tolerance was found in the null space.
    NoNullVector { smallest_singular: f64 },
    /// The null space is (numerically) more than one-dimensional; the caller
    /// must disambiguate rather than have a representative chosen silently.
    DegenerateNullSpace { dimension: usize },
    /// A runtime invariant (trace, positivity, norm) was breached beyond
    /// tolerance; usually means the step size is too large.
    InvariantBreach(String),
    /// A model failed validation; one message per violation.
    InvalidModel(Vec<String>),
    /// The joint system⊗bins dimension exceeded the configured cap.
    DimensionCapExceeded { required: usize, cap: usize },
    /// A jump was drawn from a state with ⟨c†c⟩ = 0; signals a probability
    /// bookkeeping bug rather than a physical event.
    ZeroProbabilityJump,
    /// Bad configuration values (non-positive dt, empty ensemble, ...).
    InvalidConfig(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NotPerfectSquare { len } => {
                write!(f, "vector length {len} is not a perfect square")
            }
            Error::NotHermitian { what, defect } => {
                write!(f, "{what} not Hermitian: defect {defect}")
            }
            Error::NonConvergence(what) => write!(f, "{what} failed to converge"),
            Error::NoNullVector { smallest_singular } => write!(
                f,
                "no null vector below tolerance (smallest singular value {smallest_singular:e})"
            ),
            Error::DegenerateNullSpace { dimension } => {
                write!(f, "null space is {dimension}-dimensional; refusing to pick silently")
            }
            Error::InvariantBreach(msg) => write!(f, "numerical invariant breached: {msg}"),
            Error::InvalidModel(violations) => {
                write!(f, "invalid model:")?;
                for v in violations {
                    write!(f, " [{v}]")?;
                }
                Ok(())
            }
            Error::DimensionCapExceeded { required, cap } => {
                write!(f, "joint dimension {required} exceeds cap {cap}")
            }
            Error::ZeroProbabilityJump => {
                write!(f, "jump drawn from a state with zero jump probability")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

#[cfg(any(test, feature = "std"))]
impl std::error::Error for Error {}
