use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Below `1e-12·Ω_res` the optimal time diverges like `Ω^{-1/2}`.
    #[error("frequency too small: omega = {omega:e} is below {limit:e}")]
    FrequencyTooSmall { omega: f64, limit: f64 },

    #[error("could not bracket a root: {0}")]
    BracketFailure(String),

    #[error("distance is not increasing in t_f on the solver bracket near t = {at}")]
    NonMonotone { at: f64 },

    #[error("tau_f/2 = {half:.6} lies outside the {kind} window ({lo:.6}, {hi:.6}]")]
    OutsideWindow {
        kind: &'static str,
        half: f64,
        lo: f64,
        hi: f64,
    },

    #[error("unsupported frequency window [{omega_minus}, {omega_plus}] (only bands below 2*omega_res or containing a resonance)")]
    UnsupportedWindow { omega_minus: f64, omega_plus: f64 },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("band is not in the T_abs region")]
    NotInTAbsRegion,

    #[error("inconsistent adjoint input: {0}")]
    InconsistentAdjoint(String),

    #[error("oracle found no feasible protocol up to horizon {horizon}")]
    OracleInfeasible { horizon: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
