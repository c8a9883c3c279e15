use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("weights must be nonnegative and sum to one (sum = {sum})")]
    Normalization { sum: f64 },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range<F: crate::Real>(
    name: &'static str,
    value: F,
    ok: bool,
    range: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value: value.to_f64_lossy(),
            range,
        })
    }
}
