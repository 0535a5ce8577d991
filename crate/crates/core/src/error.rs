use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("subspaces are not complementary: {0}")]
    Complement(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("outside the perturbation ball: {0}")]
    Ball(String),
    #[error("transversality condition R(T) ∩ N(A⁺) = {{0}} fails: {0}")]
    Transversality(String),
    #[error("family evaluation failed: {0}")]
    Eval(String),
    #[error("co-final breach at {point:?}: {reason}")]
    CofinalBreach { point: Vec<f64>, reason: String },
    #[error("step must be positive, got {0}")]
    Step(f64),
    #[error("grid too coarse: {0}")]
    Grid(String),
    #[error("Newton iteration did not converge after {} iterations (last residual {:e})", .trace.len(), .trace.last().copied().unwrap_or(f64::NAN))]
    NewtonDivergence { trace: Vec<f64> },
    #[error("operator is not in M₀: residual {0:e}")]
    Membership(f64),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("invalid input: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors raised by a numerical precondition (ball, transversality,
    /// co-final breach, Newton failure) rather than malformed input.
    pub fn is_numerical_precondition(&self) -> bool {
        matches!(
            self,
            Error::Ball(_)
                | Error::Transversality(_)
                | Error::CofinalBreach { .. }
                | Error::NewtonDivergence { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
