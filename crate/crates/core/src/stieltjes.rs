//! Stieltjes transforms `F(z) = int dmu(t)/(t - z)` of Jacobi-parameter measures.
//!
//! The transform is the continued fraction
//! `F = 1/(b_1 - z - a_1^2 F_1)`, unrolled over the parameter head and closed
//! with the exact m-function of the constant tail, the root of
//! `a^2 m^2 + (z - b) m + 1 = 0` on the Herglotz branch.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::jacobi::{strip, JacobiParameters, Stepper};

/// m-function of the constant sequence `a_n = a`, `b_n = b`.
///
/// Off the real axis the branch with `Im m` of the same sign as `Im z` is
/// returned. On the real axis outside `[b - 2a, b + 2a]` the decaying root
/// (smaller modulus) is returned, which is the analytic continuation from
/// either half-plane; on the cut itself the `x + i0` value is returned.
pub fn tail_m(a: f64, b: f64, z: Complex64) -> Complex64 {
    let a2 = a * a;
    let w = z - b;
    let s = (w * w - 4.0 * a2).sqrt();
    // Stable pair of roots of a2 m^2 + w m + 1.
    let t = if (w + s).norm() >= (w - s).norm() { -(w + s) / 2.0 } else { -(w - s) / 2.0 };
    let (m1, m2) = (t / a2, 1.0 / t);
    if z.im != 0.0 {
        let sign = z.im.signum();
        if m1.im * sign >= m2.im * sign {
            m1
        } else {
            m2
        }
    } else if w.re.abs() > 2.0 * a {
        if m1.norm() <= m2.norm() {
            m1
        } else {
            m2
        }
    } else if m1.im >= m2.im {
        m1
    } else {
        m2
    }
}

fn continued_fraction(params: &JacobiParameters, z: Complex64) -> Complex64 {
    let m = params.head_len();
    let mut f = tail_m(params.tail_a(), params.tail_b(), z);
    for k in (1..=m).rev() {
        let a = params.a(k);
        f = 1.0 / (params.b(k) - z - a * a * f);
    }
    f
}

/// `F_mu(z)` for `Im z != 0`.
pub fn stieltjes_f(params: &JacobiParameters, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 {
        return Err(Error::RealArgument);
    }
    Ok(continued_fraction(params, z))
}

/// `F_mu(E)` at a real point outside the essential spectrum.
///
/// Discrete eigenvalues of the head show up as poles and produce
/// non-finite or very large values near them.
pub fn stieltjes_f_real(params: &JacobiParameters, e: f64) -> Result<f64> {
    let (lo, hi) = params.essential_spectrum();
    if e >= lo && e <= hi {
        return Err(Error::InsideEssentialSpectrum { x: e, lo, hi });
    }
    Ok(continued_fraction(params, Complex64::new(e, 0.0)).re)
}

/// Transform of the second-kind measure, `a_1^2 F_strip(z)`.
pub fn second_kind_f(params: &JacobiParameters, z: Complex64) -> Result<Complex64> {
    let (stripped, mass) = strip(params);
    Ok(stieltjes_f(&stripped, z)? * mass)
}

/// `F(x + i0)` together with the vertical path used to reach it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryValue {
    pub x: f64,
    pub f: Complex64,
    pub eps_path: Vec<f64>,
    pub err_estimate: f64,
    /// `false` when `err_estimate` exceeded the threshold.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryOptions {
    /// Path is `eps_k = 2^-k` for `k = k_min..=k_max`.
    pub k_min: u32,
    pub k_max: u32,
    pub threshold: f64,
    /// Replace the last value by `2 F(eps) - F(2 eps)`.
    pub richardson: bool,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        BoundaryOptions { k_min: 10, k_max: 40, threshold: 1e-6, richardson: false }
    }
}

pub fn boundary_f(params: &JacobiParameters, x: f64) -> BoundaryValue {
    boundary_f_with(params, x, &BoundaryOptions::default())
}

pub fn boundary_f_with(params: &JacobiParameters, x: f64, opts: &BoundaryOptions) -> BoundaryValue {
    let k_min = opts.k_min.min(opts.k_max.saturating_sub(1));
    let eps_path: Vec<f64> = (k_min..=opts.k_max).map(|k| (-(k as f64)).exp2()).collect();
    let mut last = Complex64::new(0.0, 0.0);
    let mut prev = last;
    for &eps in &eps_path {
        prev = last;
        last = continued_fraction(params, Complex64::new(x, eps));
    }
    let err_estimate = (last - prev).norm();
    let f = if opts.richardson { last * 2.0 - prev } else { last };
    let converged = err_estimate.is_finite() && err_estimate <= opts.threshold;
    BoundaryValue { x, f, eps_path, err_estimate, converged }
}

/// `F / (1 + beta1 F)`, the transform after adding `beta1` to `b_1`.
pub fn rank_one_f(f: Complex64, beta1: f64) -> Result<Complex64> {
    let denom = 1.0 + f * beta1;
    if denom.norm() <= 1e-15 * (1.0 + (f * beta1).norm()) {
        return Err(Error::Pole);
    }
    Ok(f / denom)
}

/// Boundary weights of `mu`, of the second-kind measure and of the rank-one perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightBundle {
    pub x: f64,
    pub f: Complex64,
    pub w: f64,
    /// `None` when `F(x + i0) = 0`.
    pub w_tilde: Option<f64>,
    pub w_beta: Option<f64>,
    pub beta1: Option<f64>,
}

/// Off the essential spectrum the absolutely continuous weights vanish exactly.
pub fn weights(params: &JacobiParameters, x: f64, beta1: Option<f64>) -> Result<WeightBundle> {
    let bv = boundary_f(params, x);
    let mut wb = weights_from_boundary(&bv, beta1)?;
    let (lo, hi) = params.essential_spectrum();
    if x < lo || x > hi {
        wb.f.im = 0.0;
        wb.w = 0.0;
        wb.w_tilde = wb.w_tilde.map(|_| 0.0);
        wb.w_beta = wb.w_beta.map(|_| 0.0);
    }
    Ok(wb)
}

pub fn weights_from_boundary(bv: &BoundaryValue, beta1: Option<f64>) -> Result<WeightBundle> {
    if !bv.converged {
        return Err(Error::NotLebesguePoint { x: bv.x, err_estimate: bv.err_estimate });
    }
    let f = bv.f;
    let w = (f.im / core::f64::consts::PI).max(0.0);
    let abs2 = f.norm_sqr();
    let w_tilde = (abs2 > 0.0).then(|| w / abs2);
    let w_beta = beta1.map(|b| w / (1.0 + 2.0 * b * f.re + b * b * abs2));
    Ok(WeightBundle { x: bv.x, f, w, w_tilde, w_beta, beta1 })
}

/// Eigenvalue created by a rank-one perturbation and its point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass {
    pub energy: f64,
    pub mass: f64,
    /// Residual `|1 + beta1 F(E)|` at the returned energy.
    pub residual: f64,
}

/// Finds `E` with `1 + beta1 F(E) = 0` in a bracket outside the essential
/// spectrum, and the mass `1 / (beta1^2 F'(E))` of the resulting eigenvalue.
///
/// Returns `Ok(None)` when `1 + beta1 F` does not change sign over the bracket.
pub fn eigenvalue_and_mass(params: &JacobiParameters, beta1: f64, bracket: (f64, f64)) -> Result<Option<PointMass>> {
    let (mut lo, mut hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidBracket { lo, hi });
    }
    let (slo, shi) = params.essential_spectrum();
    if hi >= slo && lo <= shi {
        let x = if lo < slo { slo } else { lo };
        return Err(Error::InsideEssentialSpectrum { x, lo: slo, hi: shi });
    }
    if beta1 == 0.0 {
        return Ok(None);
    }
    let g = |e: f64| -> Result<f64> { Ok(1.0 + beta1 * stieltjes_f_real(params, e)?) };
    let mut glo = g(lo)?;
    let ghi = g(hi)?;
    if glo == 0.0 {
        hi = lo;
    } else if ghi == 0.0 {
        lo = hi;
    } else if glo.signum() == ghi.signum() {
        return Ok(None);
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    let (rlo, rhi) = (g(lo)?.abs(), g(hi)?.abs());
    let (energy, residual) = if rlo <= rhi { (lo, rlo) } else { (hi, rhi) };
    if !(residual < 1e-6) {
        return Err(Error::PoleInBracket { lo: bracket.0, hi: bracket.1 });
    }

    let dist = if energy > shi { energy - shi } else { slo - energy };
    let h = (dist / 4.0).min(1e-3);
    let f = |e: f64| stieltjes_f_real(params, e);
    let deriv =
        (-f(energy + 2.0 * h)? + 8.0 * f(energy + h)? - 8.0 * f(energy - h)? + f(energy - 2.0 * h)?) / (12.0 * h);
    let mass = 1.0 / (beta1 * beta1 * deriv);
    Ok(Some(PointMass { energy, mass, residual }))
}

/// `sum_j p_j(E)^2` over the decaying part of the sequence.
///
/// At an eigenvalue this is `1 / mu({E})`. Summation stops once terms fall
/// below double resolution of the running sum, or as soon as they start to
/// grow again after having decayed (rounding feeding the growing solution).
pub fn eigenvector_norm_sq(params: &JacobiParameters, e: f64, max_terms: usize) -> Result<f64> {
    let mut stepper = Stepper::first_kind(params, e);
    let mut sum = 1.0;
    let mut prev = 1.0;
    let mut decayed = false;
    for _ in 1..max_terms {
        let p = stepper.step()?;
        let term = p * p;
        if term < 1e-12 * sum {
            decayed = true;
        }
        if decayed && term > prev {
            break;
        }
        sum += term;
        if term < f64::EPSILON * f64::EPSILON * sum {
            break;
        }
        prev = term;
    }
    Ok(sum)
}
