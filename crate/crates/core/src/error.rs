use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("singular stage system at Fourier mode {mode} (tau = {tau:e}, |J| = {det:e})")]
    SingularMode { mode: i64, tau: f64, det: f64 },

    /// The SAV radicand `(u^p, u)_h + C0` is not positive; the caller must
    /// shift `C0` before continuing.
    #[error("auxiliary-variable radicand {radicand:e} is not positive; C0 adjustment required")]
    AdjustmentRequired { radicand: f64 },

    #[error("C0 adjustment would take v^2 negative ({value:e}); state is inconsistent")]
    InconsistentAdjustment { value: f64 },

    #[error("fixed-point iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("semi-implicit step is singular (denominator {denominator:e})")]
    SingularStep { denominator: f64 },

    #[error("breather diagnostics need a positive beta estimate, got {0:e}")]
    NonPositiveBeta(f64),

    #[error("unsupported tableau: {0} stages (only 1, 2, 3 are available)")]
    UnsupportedStages(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("reference rejected: cross-method gap {gap:e} exceeds {tolerance:e}")]
    ReferenceRejected { gap: f64, tolerance: f64 },

    #[error("empty run log")]
    EmptyLog,

    #[error("step {index} (t = {t}) failed: {source}")]
    Step {
        index: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips `Step` annotations down to the originating error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }
}
