use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),
    #[error("empty axis set")]
    EmptyAxisSet,
    #[error("axis {axis} out of range for a {ndim}-axis pmf")]
    AxisOutOfRange { axis: usize, ndim: usize },
    #[error("axis {0} appears more than once across the requested axis sets")]
    RepeatedAxis(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("alphabet product {0} exceeds the dense-tensor cap of 1e7")]
    TooLarge(usize),
    #[error("psi_{k}(u={u}, y={y}) is +inf: positive mass hits a zero-mass prior cell")]
    InfinitePsi { k: usize, u: usize, y: usize },
    #[error("joint violates Y1 _|_ Y2 | (X, Y0): gap {0:e}")]
    NotMarkov(f64),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("oracle grid too large: {params} free parameters (limit 8)")]
    OracleTooLarge { params: usize },
    #[error("singular block `{block}` (condition number {cond:e})")]
    Singular { block: String, cond: f64 },
    #[error("inadmissible omega for agent {agent}: eigenvalue {eig} outside [0, 1]")]
    InadmissibleOmega { agent: usize, eig: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("gaussian BA diverged after {iterations} iterations (objective rose 10 times in a row)")]
    Diverged { iterations: usize, trace: Vec<f64> },
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
