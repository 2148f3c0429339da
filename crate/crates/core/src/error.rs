use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("qudit dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("qudit dimension {n} exceeds the configured maximum {max}")]
    DimensionTooLarge { n: usize, max: usize },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("invalid block: {0}")]
    InvalidBlock(String),

    #[error("{what} needs {required} entries, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: u128,
        budget: usize,
    },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("Jacobi eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("eigenvalue {0:e} is below the positivity tolerance")]
    NegativeEigenvalue(f64),

    #[error("eigenvalues sum to {0}, expected 1")]
    NotNormalized(f64),

    #[error("Rényi index alpha = 1 is the von Neumann entropy")]
    AlphaIsOne,

    #[error("Rényi index must have a positive real part, got {0}")]
    InvalidAlpha(String),

    #[error("Tr rho^alpha vanishes at alpha = {0}: branch point of the Rényi entropy")]
    BranchPoint(String),

    #[error("block spectrum is degenerate (|lambda_singlet - lambda_adjoint| = {0:e})")]
    DegenerateSpectrum(f64),

    #[error("branch points are undefined for a single-site block (lambda_singlet = 0)")]
    SingleSiteBranchPoints,

    #[error("edge state |{p},{q}> vanishes for a block of length {len}")]
    NullEdgeState { p: usize, q: usize, len: usize },
}
