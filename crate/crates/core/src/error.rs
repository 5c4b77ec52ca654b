use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` out of range: {value} (expected {expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("non-finite input for `{0}`")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric (relative deviation {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite (eigenvalue ratio {0:e})")]
    NotPositiveDefinite(f64),
    #[error("σ comparison undefined: √(2/n)·θ = {0} ≥ π")]
    SigmaDomain(f64),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("quadrature did not converge (estimate {estimate}, error {error:e})")]
    Quadrature { estimate: f64, error: f64 },
    #[error("truncation radius too small: tail mass {0:e} exceeds tolerance")]
    Truncation(f64),
    #[error("rejection sampler acceptance rate {rate:e} below 1e-6 after {attempts} attempts")]
    Rejection { rate: f64, attempts: u64 },
    #[error("map inversion failed at {0}: outside the numerically covered range")]
    Inversion(f64),
    #[error("degenerate map: non-finite log-determinant")]
    DegenerateMap,
    #[error("Gaussian measure {0:e} below 1e-9")]
    NegligibleMeasure(f64),
    #[error("Monte Carlo estimate unreliable: uncertain fraction {0:e} > 1e-3")]
    Unreliable(f64),
    #[error("map slope {0} exceeds 1: contraction bound violated")]
    NotContraction(f64),
    #[error("not absolutely continuous: {0}")]
    NotAbsolutelyContinuous(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_unit(name: &'static str, t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::NonFinite(name));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange {
            name,
            value: t,
            expected: "[0, 1]",
        });
    }
    Ok(())
}
