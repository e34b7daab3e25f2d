use std::fmt;

/// Errors surfaced by the lab's primitives and sweep runners.
#[derive(Debug)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    Domain(String),
    /// Input outside the representable range of the native integer width.
    Range(String),
    /// Problem size exceeds a configured dense-storage limit.
    Capacity { p: u64, limit: u64 },
    /// Iterative solver ran out of iterations; carries the last iterate.
    Convergence {
        iters: usize,
        last: f64,
        residual: f64,
    },
    /// A computed identity failed to hold within tolerance.
    Verification { what: String, max_deviation: f64 },
    /// Invalid sweep or experiment configuration.
    Config(String),
    Io(std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Range(msg) => write!(f, "range error: {msg}"),
            Error::Capacity { p, limit } => {
                write!(f, "capacity error: p={p} exceeds dense limit {limit}")
            }
            Error::Convergence {
                iters,
                last,
                residual,
            } => write!(
                f,
                "no convergence after {iters} iterations (last estimate {last}, residual {residual:e})"
            ),
            Error::Verification {
                what,
                max_deviation,
            } => write!(f, "verification failed: {what} (max deviation {max_deviation:e})"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
