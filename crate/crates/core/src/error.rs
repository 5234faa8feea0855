use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("off-diagonal coefficient a({index}) = {value} is not positive")]
    NonPositiveA { index: usize, value: f64 },

    #[error("coefficient {name} is not finite")]
    NonFinite { name: &'static str },

    #[error("polynomial count must be at least {min}, got {got}")]
    CountTooSmall { min: usize, got: usize },

    #[error("recurrence overflowed at index {index}")]
    Overflow { index: usize },

    #[error("index {index} lies beyond the materialized horizon {horizon}")]
    BeyondHorizon { index: usize, horizon: usize },

    #[error("the Stieltjes transform requires Im z != 0; use the boundary value instead")]
    RealArgument,

    #[error("point {x} lies in the essential spectrum [{lo}, {hi}]")]
    InsideEssentialSpectrum { x: f64, lo: f64, hi: f64 },

    #[error("1 + beta1*F vanishes: the perturbed operator has an eigenvalue here")]
    Pole,

    #[error("boundary value at x = {x} did not settle (err estimate {err_estimate:e}); not a strong Lebesgue point numerically")]
    NotLebesguePoint { x: f64, err_estimate: f64 },

    #[error("weight at x = {x} is not positive ({w})")]
    NonPositiveWeight { x: f64, w: f64 },

    #[error("second-kind weight undefined at x = {x}: F(x+i0) = 0")]
    UndefinedSecondKindWeight { x: f64 },

    #[error("bracket [{lo}, {hi}] is invalid")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("sign change in [{lo}, {hi}] is a pole of F, not a root")]
    PoleInBracket { lo: f64, hi: f64 },

    #[error("variation-of-parameters system is singular at k = {k}")]
    SingularSystem { k: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("adaptive quadrature stopped at error {achieved:e} (requested {requested:e})")]
    QuadratureNotConverged { achieved: f64, requested: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
