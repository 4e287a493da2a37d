use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not Schur stable (spectral radius estimate {rho:.12})")]
    NotSchur { rho: f64 },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("pair is not controllable (rank {rank} < {n})")]
    NotControllable { rank: usize, n: usize },

    #[error("pair is not observable (rank {rank} < {n})")]
    NotObservable { rank: usize, n: usize },

    #[error("singular matrix: {0}")]
    Singular(&'static str),

    #[error("deadbeat synthesis failed: residual {residual:.3e} exceeds {threshold:.3e}")]
    SynthesisFailed { residual: f64, threshold: f64 },

    #[error("output outside the quantization frame: |y - center| = {distance:.6e} > E = {range:.6e}")]
    OutOfRange { distance: f64, range: f64 },

    #[error("quantizer index {index} outside 1..={max}")]
    BadIndex { index: u64, max: u64 },

    #[error("quantizer index space {levels}^{dims} does not fit in 64 bits")]
    IndexOverflow { levels: u64, dims: usize },

    #[error(
        "sigma interval is empty: 1/N = {lo:.6} >= 1/alpha = {hi:.6}; the smallest feasible N is {min_levels}"
    )]
    Infeasible { lo: f64, hi: f64, min_levels: u64 },

    #[error("sigma = {sigma} outside the admissible interval [{lo:.6}, {hi:.6})")]
    SigmaOutOfRange { sigma: f64, lo: f64, hi: f64 },

    #[error("attack schedule violates the duration budget at s = {step}: {count} > {bound:.6}")]
    BudgetViolation { step: usize, count: usize, bound: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("frame breach at s = {step}: {source}")]
    FrameBreach {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invariant breach at s = {step}: {what}")]
    InvariantBreach { step: usize, what: String },

    #[error("trace is degenerate: {0}")]
    DegenerateTrace(&'static str),

    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures that surface a broken runtime invariant rather than bad input.
    pub fn is_runtime_breach(&self) -> bool {
        matches!(self, Error::FrameBreach { .. } | Error::InvariantBreach { .. })
    }
}
