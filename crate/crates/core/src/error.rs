use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty measure")]
    EmptyMeasure,
    #[error("exponent {value} outside {range}")]
    Exponent { value: f64, range: &'static str },
    #[error("support too large: {0}")]
    SupportTooLarge(String),
    #[error("separation violated: {0}")]
    SeparationViolated(String),
    #[error("resolution violated: {0}")]
    Resolution(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("cover not Katz-Tao: scale level {level} has constant {constant}")]
    CoverNotKatzTao { level: u32, constant: f64 },
    #[error("mass condition unachievable at E-cell {index}: union mass {mass}")]
    MassCondition { index: usize, mass: f64 },
    #[error("postcondition failed: {0}")]
    Postcondition(String),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_exponent(
    value: f64,
    lo: f64,
    hi: f64,
    lo_open: bool,
    hi_open: bool,
    range: &'static str,
) -> Result<()> {
    let lo_ok = if lo_open { value > lo } else { value >= lo };
    let hi_ok = if hi_open { value < hi } else { value <= hi };
    if lo_ok && hi_ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Exponent { value, range })
    }
}
