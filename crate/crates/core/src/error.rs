use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {re}+{im}i is outside the unit disk")]
    OutsideDisk { re: f64, im: f64 },

    #[error("inverse flow left the unit disk at t = {t}")]
    LeftDisk { t: f64 },

    #[error("curve under-resolved: argument jump {jump} at sample {index}")]
    UnderResolved { index: usize, jump: f64 },

    #[error("R did not reach log(sqrt 3) before the hard cap t = {cap}")]
    TauNotReached { cap: f64 },

    #[error("no ceiling: beta = {beta} must be below 4a = {four_a}")]
    NoCeiling { beta: f64, four_a: f64 },

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("domain: {0}")]
    Domain(String),

    #[error("turning number mismatch: per-turn {per_turn} vs lifted {lifted}")]
    TurningMismatch { per_turn: f64, lifted: f64 },

    #[error("vertex {0} is not an interior vertex")]
    NotInterior(usize),
}
