//! Quadrature check of the sinc integral identity
//! `int sin(pi rho (s-a)) / (pi (s-a)(s-b)) ds = -int sin(pi rho (s-b)) / (pi (s-a)(s-b)) ds`
//! for `Im a > 0 > Im b`.

use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_line};

/// Default absolute tolerance for each side.
pub const DEFAULT_QUAD_TOL: f64 = 1e-6;

const MAX_PANELS: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: Complex64,
    /// The integral with `sin(pi rho (s-b))`; the identity says it equals `-lhs`.
    pub rhs: Complex64,
    /// `|lhs + rhs|`.
    pub max_dev: f64,
    /// Truncation radius `R`; both integrals run over `[-R, R]`.
    pub radius: f64,
    /// Quadrature error estimate plus truncation bound, per side.
    pub lhs_error: f64,
    pub rhs_error: f64,
}

fn validate(rho: f64, a: Complex64, b: Complex64, tol: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument("rho must be positive and finite"));
    }
    if !(a.im > 0.0 && b.im < 0.0) {
        return Err(Error::InvalidArgument("need Im a > 0 > Im b"));
    }
    if !(a.re.is_finite() && b.re.is_finite() && a.im.is_finite() && b.im.is_finite()) {
        return Err(Error::NonFinite { name: "offset" });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("quadrature tolerance must be positive"));
    }
    Ok(())
}

/// Radius beyond which `|int_{|s|>R} sin(k(s-c)) / (pi (s-a)(s-b)) ds| <= tol / 2`
/// for `c` in `{a, b}` and `k = pi rho`.
///
/// Uses the smaller of an integration-by-parts bound, `4M / (pi^2 rho (R-r)^2)`,
/// and the plain `|sin| <= M` bound, `2M / (pi (R-r))`, where `r = max(|a|, |b|)`
/// and `M = exp(pi rho max(Im a, -Im b))`.
pub fn truncation_radius(rho: f64, a: Complex64, b: Complex64, tol: f64) -> f64 {
    let r = a.norm().max(b.norm());
    let m = (PI * rho * a.im.max(-b.im)).exp();
    let by_parts = (8.0 * m / (PI * PI * rho * tol)).sqrt();
    let crude = 4.0 * m / (PI * tol);
    r + 1.0 + by_parts.min(crude)
}

fn side(rho: f64, shift: Complex64, a: Complex64, b: Complex64, radius: f64, tol: f64) -> Result<(Complex64, f64)> {
    let k = PI * rho;
    let f = |s: f64| {
        let z = Complex64::new(s, 0.0);
        ((z - shift) * k).sin() / ((z - a) * (z - b) * PI)
    };
    let panels = ((radius * rho).ceil() as usize).max(1) + 1;
    let r = integrate(f, -radius, radius, panels, tol / 2.0, MAX_PANELS)?;
    Ok((r.value, r.error + tol / 2.0))
}

/// Evaluates both sides of the identity by independent adaptive quadrature.
pub fn sinc_identity_check(rho: f64, a: Complex64, b: Complex64, quad_tol: f64) -> Result<IdentityCheck> {
    validate(rho, a, b, quad_tol)?;
    let radius = truncation_radius(rho, a, b, quad_tol);
    let (lhs, lhs_error) = side(rho, a, a, b, radius, quad_tol)?;
    let (rhs, rhs_error) = side(rho, b, a, b, radius, quad_tol)?;
    Ok(IdentityCheck { lhs, rhs, max_dev: (lhs + rhs).norm(), radius, lhs_error, rhs_error })
}

/// `int (exp(i pi rho (a-s)) - 1) / (2 pi i (s-b)(a-s)) ds`, the contour-evaluated
/// form of the left side, by quadrature.
///
/// The constant part is integrated over the whole line; the oscillatory
/// part is truncated at the same radius as the sine integrals.
pub fn exponential_form(rho: f64, a: Complex64, b: Complex64, quad_tol: f64) -> Result<Complex64> {
    validate(rho, a, b, quad_tol)?;
    let k = PI * rho;
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let radius = truncation_radius(rho, a, b, quad_tol);
    let osc = |s: f64| {
        let z = Complex64::new(s, 0.0);
        (Complex64::i() * k * (a - z)).exp() / ((z - b) * (a - z) * two_pi_i)
    };
    let panels = ((radius * rho).ceil() as usize).max(1) + 1;
    let oscillatory = integrate(osc, -radius, radius, panels, quad_tol / 4.0, MAX_PANELS)?;
    let constant = |s: f64| {
        let z = Complex64::new(s, 0.0);
        -Complex64::new(1.0, 0.0) / ((z - b) * (a - z) * two_pi_i)
    };
    let constant = integrate_line(constant, quad_tol / 4.0, MAX_PANELS)?;
    Ok(oscillatory.value + constant.value)
}
