use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error(
        "matrix is not Hermitian: entries ({row},{col}) and ({col},{row}) differ by {deviation:e}"
    )]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("matrix is not unitary: |M^dag M - 1|_F = {0:e}")]
    NotUnitary(f64),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("mixing angle undefined for omega = {omega}, delta = {delta}")]
    UndefinedMixingAngle { omega: f64, delta: f64 },

    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),

    #[error(
        "step {step:e} too large: estimated truncation error {estimate:e} exceeds {tolerance:e}"
    )]
    StepTooLarge {
        step: f64,
        estimate: f64,
        tolerance: f64,
    },

    #[error("path is not closed: endpoint distance {0:e}")]
    OpenPath(f64),

    #[error("at least {min} steps required, got {got}")]
    TooFewSteps { min: usize, got: usize },

    #[error("gauge field is not single-valued along the loop: endpoint mismatch {0:e}")]
    NotSingleValued(f64),

    #[error("gauge field derivative disagrees with finite differences by {0:e}")]
    InconsistentDerivative(f64),

    #[error("tolerance {tolerance:e} not met with {steps} steps (estimate {estimate:e}); about {required} steps needed")]
    ToleranceNotMet {
        steps: usize,
        estimate: f64,
        tolerance: f64,
        required: usize,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
