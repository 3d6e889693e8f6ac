use thiserror::Error;

pub type Result<T> = std::result::Result<T, ScpwError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScpwError {
    #[error("degree sequence is empty")]
    EmptySequence,
    #[error("all degrees are zero")]
    AllZeroDegrees,
    #[error("total node count is zero")]
    ZeroCount,
    #[error("invalid moments: {0}")]
    InvalidMoments(String),
    #[error("infeasible moments: {0}")]
    Infeasible(String),
    #[error("degenerate degree distribution: variance {variance:e} is not above the floor {floor:e}")]
    DegenerateVariance { variance: f64, floor: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("closure denominator x + y = {0:e} is below the evaluation floor")]
    ClosureDenominator(f64),
    #[error("step size underflow at T = {t}")]
    StepUnderflow { t: f64 },
    #[error("no endemic equilibrium: delta = {delta} does not exceed delta_c = {delta_c}")]
    NoEndemicEquilibrium { delta: f64, delta_c: f64 },
    #[error("vanishing denominator in {what} (value {value:e})")]
    ZeroDenominator { what: &'static str, value: f64 },
    #[error("Newton iteration failed: {0}")]
    NewtonFailed(String),
    #[error("steady state not reached by T = {t_max}")]
    NotConverged { t_max: f64 },
    #[error("odd stub sum {0}")]
    OddStubSum(u64),
    #[error("degree {degree} of node {node} is not below the node count {n}")]
    DegreeTooLarge { node: usize, degree: usize, n: usize },
    #[error("trajectory went extinct at t = {t_extinct} before burn-in ended at t = {t_burn}")]
    ExtinctBeforeBurnIn { t_extinct: f64, t_burn: f64 },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown {kind} '{name}'")]
    UnknownStrategy { kind: &'static str, name: String },
    #[error("io error: {0}")]
    Io(String),
}

impl ScpwError {
    /// True for errors caused by the caller's input rather than by a numerical failure.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            ScpwError::ClosureDenominator(_)
                | ScpwError::StepUnderflow { .. }
                | ScpwError::NewtonFailed(_)
                | ScpwError::NotConverged { .. }
                | ScpwError::ZeroDenominator { .. }
                | ScpwError::Io(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ScpwError::EmptySequence => "empty_sequence",
            ScpwError::AllZeroDegrees => "all_zero_degrees",
            ScpwError::ZeroCount => "zero_count",
            ScpwError::InvalidMoments(_) => "invalid_moments",
            ScpwError::Infeasible(_) => "infeasible_moments",
            ScpwError::DegenerateVariance { .. } => "degenerate_variance",
            ScpwError::InvalidParameter(_) => "invalid_parameter",
            ScpwError::InvalidState(_) => "invalid_state",
            ScpwError::ClosureDenominator(_) => "closure_denominator",
            ScpwError::StepUnderflow { .. } => "step_underflow",
            ScpwError::NoEndemicEquilibrium { .. } => "no_endemic_equilibrium",
            ScpwError::ZeroDenominator { .. } => "zero_denominator",
            ScpwError::NewtonFailed(_) => "newton_failed",
            ScpwError::NotConverged { .. } => "not_converged",
            ScpwError::OddStubSum(_) => "odd_stub_sum",
            ScpwError::DegreeTooLarge { .. } => "degree_too_large",
            ScpwError::ExtinctBeforeBurnIn { .. } => "extinct_before_burn_in",
            ScpwError::Parse { .. } => "parse",
            ScpwError::UnknownStrategy { .. } => "unknown_strategy",
            ScpwError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for ScpwError {
    fn from(e: std::io::Error) -> Self {
        ScpwError::Io(e.to_string())
    }
}
