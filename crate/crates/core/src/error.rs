use thiserror::Error;

/// Failure modes of the solvers and constant evaluators.
///
/// Every variant maps to a stable machine-readable reason code and to one of
/// two failure classes: precondition violations (the inputs are outside the
/// domain of the operation) and convergence failures (the inputs were valid
/// but the numerical construction did not close).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum KsError {
    #[error("parameter domain: {0}")]
    Domain(String),

    #[error("supercritical exponent: p = {p} is not below p* = {p_star}")]
    Supercritical { p: f64, p_star: f64 },

    #[error("divergent integral: {0}")]
    Divergence(String),

    #[error("function increases near r = {r:e}; a radially non-increasing profile is required")]
    Monotonicity { r: f64 },

    #[error("division domain: {0}")]
    DivisionDomain(String),

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("no case applies: {0}")]
    Unclassifiable(String),

    #[error("iteration did not converge after {iterations} steps (last residual {:e})", residual_history.last().copied().unwrap_or(f64::NAN))]
    IterationFailure {
        iterations: usize,
        residual_history: Vec<f64>,
    },

    #[error("iterate {iteration} left the barrier set near r = {r:e}")]
    BarrierEscape { iteration: usize, r: f64 },

    #[error("branch function has no sign change on [{lo}, {hi}]")]
    BracketFailure {
        lo: f64,
        hi: f64,
        f_values: Vec<(f64, f64)>,
    },

    #[error("shooting failed: {0}")]
    ShootingFailure(String),
}

impl KsError {
    pub fn reason_code(&self) -> &'static str {
        match self {
            KsError::Domain(_) => "domain",
            KsError::Supercritical { .. } => "supercritical",
            KsError::Divergence(_) => "divergence",
            KsError::Monotonicity { .. } => "monotonicity",
            KsError::DivisionDomain(_) => "division_domain",
            KsError::RegimeMismatch(_) => "regime_mismatch",
            KsError::Unclassifiable(_) => "unclassifiable",
            KsError::IterationFailure { .. } => "iteration_failure",
            KsError::BarrierEscape { .. } => "barrier_escape",
            KsError::BracketFailure { .. } => "bracket_failure",
            KsError::ShootingFailure(_) => "shooting_failure",
        }
    }

    /// True when the inputs were admissible but the construction failed.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            KsError::IterationFailure { .. }
                | KsError::BarrierEscape { .. }
                | KsError::BracketFailure { .. }
                | KsError::ShootingFailure(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, KsError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(KsError::Domain(msg.into()))
}
