use thiserror::Error;

/// Errors raised by the simulator, the channels and the analytic oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("entry count {found} does not match shape {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, found: usize },

    #[error("matrix is not Hermitian (max |M - M^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max |U^dagger U - I| = {0:e})")]
    NotUnitary(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("Kraus operators are not complete (max |sum K^dagger K - I| = {0:e})")]
    IncompleteKraus(f64),

    #[error("parameter `{name}` = {value} is out of range")]
    ParameterOutOfRange { name: &'static str, value: f64 },

    #[error("vector is not normalised (norm {0})")]
    NotNormalised(f64),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("steady state is not unique: {0} eigenvalues of unit magnitude")]
    DegenerateSteadyState(usize),

    #[error("sampled outcome {outcome} has probability {probability:e}")]
    ZeroProbabilityBranch { outcome: usize, probability: f64 },

    #[error("singular linear system")]
    SingularMatrix,

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("quadrature needs at least 4 nodes per axis, got {0}")]
    TooFewNodes(usize),

    #[error("closed-form expression is singular at these parameters")]
    SingularFormula,

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange { name, value })
    }
}
