use thiserror::Error;

/// Errors raised by the library and mapped to CLI exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no Hadamard construction for order {0}")]
    UnsupportedOrder(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("argument out of domain: {0}")]
    DomainError(String),
    #[error("contraction factor beta is zero")]
    ZeroContraction,
    #[error("rate {rate} bits is not below the decodable bound {bound} bits")]
    RateInfeasible { rate: f64, bound: f64 },
    #[error("transient schedule infeasible: {0}")]
    InfeasibleTransient(String),
    #[error("singular steady-state system (1 - C A^(M-1) = 0)")]
    SingularSystem,
    #[error("cross gain a = 0; use the no-interference solution")]
    DegenerateGain,
    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),
    #[error("no admissible quartic root")]
    NoAdmissibleRoot,
    #[error("GDoF undefined at alpha = 1")]
    UndefinedAtOne,
    #[error("degenerate denominator in g_lambda minimizer")]
    DegenerateDenominator,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown figure id '{0}'")]
    UnknownFigure(String),
    #[error("empty parameter grid")]
    EmptyGrid,
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// True when the error reflects an infeasible or undefined problem
    /// rather than a malformed request.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::RateInfeasible { .. }
                | Error::InfeasibleTransient(_)
                | Error::SingularSystem
                | Error::RootNotBracketed(_)
                | Error::NoAdmissibleRoot
                | Error::UndefinedAtOne
                | Error::DegenerateDenominator
                | Error::DegenerateGain
                | Error::ZeroContraction
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
