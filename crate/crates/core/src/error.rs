use thiserror::Error;

/// Errors raised by estimation, inference and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate kernel density at x = {x}")]
    DegenerateDensity { x: f64 },

    #[error("estimated variance below floor at every in-interval observation")]
    DegenerateVariance,

    #[error("no covariate value falls in [{lo}, {hi}]")]
    EmptyInterval { lo: f64, hi: f64 },

    #[error("estimated excess fourth moment is not positive ({0})")]
    NonpositiveV4(f64),

    #[error("curve {curve} has no non-degenerate design point")]
    AllDegenerate { curve: usize },

    #[error("cannot draw {requested} distinct sites from a lattice of {available}")]
    TooMany { requested: usize, available: usize },

    #[error("negative variance {value} at x = {x}")]
    NegativeVariance { x: f64, value: f64 },

    #[error("locations {first} and {second} coincide")]
    DuplicateLocation { first: usize, second: usize },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by numerical degeneracy of the data rather
    /// than malformed input.
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::DegenerateDensity { .. }
                | Error::DegenerateVariance
                | Error::EmptyInterval { .. }
                | Error::NonpositiveV4(_)
                | Error::AllDegenerate { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
