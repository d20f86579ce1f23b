use thiserror::Error;

/// Errors produced by the modeling, estimation and data layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate series")]
    DegenerateSeries,
    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("weak-stationarity closed form available only for (1,1,1)")]
    UnsupportedOrders,
    #[error("nonstationary: moments do not exist (c2 = {c2})")]
    Nonstationary { c2: f64 },
    #[error("degenerate centers: k not identified")]
    KNotIdentified,
    #[error("numerical overflow in h recursion")]
    Overflow,
    #[error("Hessian singular: model over-parameterized for data")]
    SingularHessian,
    #[error("optimizer did not converge after {0} iterations")]
    NotConverged(usize),
    #[error("not at an interior maximum")]
    NotInteriorMaximum,
    #[error("R² undefined: {0}")]
    R2Undefined(String),
    #[error("misaligned inputs: {0}")]
    Misaligned(String),
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{0}: no data rows")]
    NoDataRows(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
