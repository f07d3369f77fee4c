use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("component count mismatch: expected {expected}, found {found}")]
    ComponentMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("frequency {freq} exceeds the resolvable bound {bound}")]
    Resolution { freq: f64, bound: f64 },
    #[error("block index {0} outside the partition range")]
    BlockOutOfRange(i32),
    #[error("schedule segments overlap at t = {0}")]
    Overlap(f64),
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("picard iteration did not contract (ratio {ratio:.4} at iteration {iteration})")]
    NonContraction { ratio: f64, iteration: usize },
    #[error("picard iteration exceeded {0} iterations")]
    MaxIterations(usize),
    #[error("blow-up detected at t = {t}: norm {norm:e}")]
    BlowUp { t: f64, norm: f64 },
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("snapshot format error: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
