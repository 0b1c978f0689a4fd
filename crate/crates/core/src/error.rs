use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index out of range: {what} = {value} (allowed {min}..={max})")]
    Range {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "reaction step is too stiff at step {step} (t = {time}), cell {cell}: \
         positivity guard still failing after {halvings} halvings of dt"
    )]
    Stiffness {
        step: usize,
        time: f64,
        cell: usize,
        halvings: u32,
    },

    #[error("non-finite value in state at step {step} (t = {time}), size {size}, cell {cell}")]
    NonFinite {
        step: usize,
        time: f64,
        size: usize,
        cell: usize,
    },

    #[error("tridiagonal solve broke down at row {row}: pivot {pivot}")]
    SolverBreakdown { row: usize, pivot: f64 },
}

impl Error {
    pub(crate) fn range(what: &'static str, value: usize, min: usize, max: usize) -> Self {
        Error::Range {
            what,
            value,
            min,
            max,
        }
    }
}
