use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{context}: entry {index} is {value}, expected 0 or 1")]
    NonBinary {
        context: &'static str,
        index: usize,
        value: f64,
    },
    #[error("{context}: entry {index} is {value}, outside [0, 1]")]
    OutOfUnitRange {
        context: &'static str,
        index: usize,
        value: f64,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("enumeration over {vars} binary variables exceeds the bound of {bound}")]
    EnumerationBound { vars: usize, bound: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Idx(#[from] crate::data::IdxError),
    #[error("not enough images of class {class}: need {needed}, found {found}")]
    InsufficientClass { class: u8, needed: usize, found: usize },
    #[error("malformed text model at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("malformed model blob: {0}")]
    ModelBlob(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            context,
            expected,
            actual,
        })
    }
}

pub(crate) fn check_binary(context: &'static str, v: &[f64]) -> Result<()> {
    match v.iter().position(|&e| e != 0.0 && e != 1.0) {
        None => Ok(()),
        Some(index) => Err(Error::NonBinary {
            context,
            index,
            value: v[index],
        }),
    }
}

pub(crate) fn check_unit_range(context: &'static str, v: &[f64]) -> Result<()> {
    match v.iter().position(|&e| !(0.0..=1.0).contains(&e)) {
        None => Ok(()),
        Some(index) => Err(Error::OutOfUnitRange {
            context,
            index,
            value: v[index],
        }),
    }
}
