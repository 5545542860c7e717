use thiserror::Error;

/// Invalid input to one of the simulator's pure operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("{name} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("{0} is not finite")]
    NonFinite(&'static str),
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("density matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("density matrix trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("density matrix has eigenvalue {0:e} < 0")]
    NotPositive(f64),
    #[error("probabilities are invalid (sum {sum}, min {min})")]
    BadDistribution { sum: f64, min: f64 },
    #[error("regime violation: {0}")]
    Regime(String),
    #[error("matrix violates NOT-duality for player {0}")]
    NotDual(char),
    #[error("unsupported tap configuration: {0}")]
    UnsupportedTap(String),
}

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    min: f64,
    max: f64,
) -> Result<f64, DomainError> {
    if !value.is_finite() {
        return Err(DomainError::NonFinite(name));
    }
    if value < min - crate::tolerance::ANGLE || value > max + crate::tolerance::ANGLE {
        return Err(DomainError::OutOfRange {
            name,
            value,
            min,
            max,
        });
    }
    Ok(value.clamp(min, max))
}
