use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("effect {index} is not Hermitian (max |E - E^†| = {deviation:.3e})")]
    NotHermitian { index: usize, deviation: f64 },
    #[error("effect {index} is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { index: usize, min_eigenvalue: f64 },
    #[error("effects do not sum to the identity (max deviation {deviation:.3e}, last effect index {index})")]
    NotComplete { index: usize, deviation: f64 },
    #[error("outcome {value} at index {index} duplicates an earlier outcome")]
    DuplicateOutcome { index: usize, value: f64 },
    #[error("{0}")]
    InvalidInput(String),
    #[error("off-diagonal element |A_01| = {0:.3e} is degenerate; the normalization tau is undefined")]
    DegenerateOffDiagonal(f64),
    #[error("outcomes are not commensurate with a common lattice (outcome index {index})")]
    OffLattice { index: usize },
    #[error("{what} = {value} exceeds cap {cap}")]
    CapExceeded { what: &'static str, value: usize, cap: usize },
    #[error("grid too narrow: boundary density {boundary:.3e} exceeds 1e-10")]
    GridTooNarrow { boundary: f64 },
    #[error("negative density {value:.3e} at grid index {index}")]
    NegativeDensity { index: usize, value: f64 },
    #[error("probability {value:.3e} at lattice index {index} is negative beyond rounding")]
    NegativeProbability { index: usize, value: f64 },
    #[error("loss probability p = {0} is outside (0, 1]")]
    InvalidP(f64),
    #[error("effective width s^2 = {0:.3e} diverges")]
    Divergent(f64),
    #[error("channel parameter lambda = {0} is singular for this channel")]
    SingularChannel(f64),
    #[error("pushforward grid touches the endpoint singularity at x = {0}")]
    EndpointSingular(f64),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Input-validation errors, as opposed to numeric failures during compute.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NegativeProbability { .. }
                | Error::NegativeDensity { .. }
                | Error::Numerical(_)
                | Error::Divergent(_)
                | Error::GridTooNarrow { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NotPositive { .. } => "NotPositive",
            Error::NotComplete { .. } => "NotComplete",
            Error::DuplicateOutcome { .. } => "DuplicateOutcome",
            Error::InvalidInput(_) => "InvalidInput",
            Error::DegenerateOffDiagonal(_) => "DegenerateOffDiagonal",
            Error::OffLattice { .. } => "OffLattice",
            Error::CapExceeded { .. } => "CapExceeded",
            Error::GridTooNarrow { .. } => "GridTooNarrow",
            Error::NegativeDensity { .. } => "NegativeDensity",
            Error::NegativeProbability { .. } => "NegativeProbability",
            Error::InvalidP(_) => "InvalidP",
            Error::Divergent(_) => "Divergent",
            Error::SingularChannel(_) => "SingularChannel",
            Error::EndpointSingular(_) => "EndpointSingular",
            Error::Numerical(_) => "Numerical",
            Error::Io(_) => "Io",
        }
    }
}
