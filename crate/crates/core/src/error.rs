use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    /// The iteration budget ran out. `iterate` is the last state vector of
    /// the solver so the caller can see where it stalled.
    #[error("{model} fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        model: &'static str,
        iterations: usize,
        residual: f64,
        iterate: Vec<f64>,
    },

    #[error("offered load is infeasible: buffer occupancy rho = {rho} > 1")]
    Infeasible { rho: f64 },

    #[error("channel saturated: n_b = {n_b} <= lambda*N*(T_tr - slot) = {drain}")]
    Saturated { n_b: f64, drain: f64 },

    #[error("collision delay is undefined at p_c = 1")]
    UndefinedAtOne,

    #[error("unknown MAC policy `{0}` (expected `dot11p`, `dot11p:<cw>` or `spcdc`)")]
    InvalidPolicy(String),

    #[error("result tables are not comparable: {0}")]
    Incomparable(String),

    #[error("scenario file: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParams {
            field,
            reason: reason.into(),
        }
    }
}
