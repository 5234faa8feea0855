//! Christoffel-Darboux kernels, their scaling limits and the diagnostics built on them.
//!
//! All kernels are bilinear, `K_n(x, y) = sum_{j<n} p_j(x) p_j(y)`, with no
//! complex conjugation; complex arguments are analytic continuations.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::jacobi::{solution_values, JacobiParameters, Stepper};
use crate::perturbation::{apply, PerturbationSpec};
use crate::stieltjes::{weights, WeightBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    /// Direct `sum_{j<n} p_j(x) p_j(y)`.
    Sum,
    /// `a_n (p_n(x) p_{n-1}(y) - p_{n-1}(x) p_n(y)) / (x - y)`.
    CdFormula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleMode {
    /// Offsets `a/n`, normalizer `n`.
    ByN,
    /// Offsets `a/(w K_n(x0, x0))`, normalizer `K_n(x0, x0)`.
    ByDiag,
}

impl ScaleMode {
    pub fn name(self) -> &'static str {
        match self {
            ScaleMode::ByN => "by_n",
            ScaleMode::ByDiag => "by_diag",
        }
    }
}

impl fmt::Display for ScaleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScaleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "by_n" => Ok(ScaleMode::ByN),
            "by_diag" => Ok(ScaleMode::ByDiag),
            _ => Err(Error::InvalidArgument("unknown scaling mode")),
        }
    }
}

/// A scaled kernel value next to its sine-kernel target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample {
    pub n: usize,
    pub x0: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub value: Complex64,
    pub target: Complex64,
    pub abs_err: f64,
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn first_kind(params: &JacobiParameters, z: Complex64, n: usize) -> Result<Vec<Complex64>> {
    solution_values(Stepper::first_kind(params, z), n)
}

fn second_kind(params: &JacobiParameters, z: Complex64, n: usize) -> Result<Vec<Complex64>> {
    solution_values(Stepper::second_kind(params, z), n)
}

fn bilinear(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(x, y)| x * y).sum()
}

/// `2^e` for the exponents that matter next to a sum of at least 1.
fn pow2(e: i32) -> f64 {
    if e < -1022 {
        0.0
    } else if e > 1023 {
        f64::INFINITY
    } else {
        f64::from_bits(((e + 1023) as u64) << 52)
    }
}

/// First-kind recurrence at a real point with the state kept as `(y, a y_prev) 2^e`.
///
/// Rescaling by powers of two is exact, so values match the plain recurrence
/// while they are normal; decaying solutions never reach the subnormal range.
struct ScaledFirstKind<'a> {
    params: &'a JacobiParameters,
    x: f64,
    k: usize,
    y: f64,
    lagged: f64,
    e: i32,
}

impl<'a> ScaledFirstKind<'a> {
    const HIGH: f64 = 1.3407807929942597e154;
    const LOW: f64 = 7.458340731200207e-155;

    fn new(params: &'a JacobiParameters, x: f64) -> Self {
        ScaledFirstKind { params, x, k: 0, y: 1.0, lagged: 0.0, e: 0 }
    }

    /// `p_k(x)^2`.
    fn square(&self) -> f64 {
        let v = self.y * pow2(self.e);
        v * v
    }

    fn step(&mut self) -> Result<()> {
        let k = self.k + 1;
        self.params.check_index(k)?;
        let a = self.params.a(k);
        let next = ((self.x - self.params.b(k)) * self.y - self.lagged) / a;
        if !next.is_finite() {
            return Err(Error::Overflow { index: k });
        }
        self.lagged = self.y * a;
        self.y = next;
        self.k = k;
        let m = self.y.abs().max(self.lagged.abs());
        if m > Self::HIGH || (m < Self::LOW && m > 0.0) {
            let shift = if m > Self::HIGH { -512 } else { 512 };
            self.y *= pow2(shift);
            self.lagged *= pow2(shift);
            self.e -= shift;
        }
        Ok(())
    }
}

/// `K_n(x, x) = sum_{j<n} p_j(x)^2` at a real point.
pub fn diagonal_kernel(params: &JacobiParameters, x: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::CountTooSmall { min: 1, got: 0 });
    }
    let mut s = ScaledFirstKind::new(params, x);
    let mut sum = 1.0;
    for _ in 1..n {
        s.step()?;
        sum += s.square();
    }
    if !sum.is_finite() {
        return Err(Error::Overflow { index: n - 1 });
    }
    Ok(sum)
}

/// `K_n(x, x)` for each `n` in an increasing ladder, in one pass.
pub fn diagonal_trace(params: &JacobiParameters, x: f64, ladder: &[usize]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(ladder.len());
    let mut s = ScaledFirstKind::new(params, x);
    let mut sum = 0.0;
    let mut count = 0;
    for &n in ladder {
        if n == 0 || n < count {
            return Err(Error::InvalidArgument("ladder must be positive and increasing"));
        }
        while count < n {
            if count > 0 {
                s.step()?;
            }
            sum += s.square();
            count += 1;
        }
        if !sum.is_finite() {
            return Err(Error::Overflow { index: n - 1 });
        }
        out.push(sum);
    }
    Ok(out)
}

pub fn cd_kernel(
    params: &JacobiParameters,
    x: Complex64,
    y: Complex64,
    n: usize,
    method: KernelMethod,
) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::CountTooSmall { min: 1, got: 0 });
    }
    let near = (x - y).norm() <= 1e-13 * (1.0 + x.norm());
    match method {
        KernelMethod::CdFormula if !near => {
            let px = first_kind(params, x, n + 1)?;
            let py = first_kind(params, y, n + 1)?;
            let num = px[n] * py[n - 1] - px[n - 1] * py[n];
            Ok(num * params.a(n) / (x - y))
        }
        _ => {
            let px = first_kind(params, x, n)?;
            let py = first_kind(params, y, n)?;
            Ok(bilinear(&px, &py))
        }
    }
}

/// `sin(pi rho (b - a)) / (pi w (b - a))`, equal to `rho / w` at `b = a`.
pub fn sine_target(rho: f64, w: f64, a: Complex64, b: Complex64) -> Complex64 {
    let u = (b - a) * (PI * rho);
    let sinc = if u.norm() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 6.0 + u2 * u2 / 120.0 - u2 * u2 * u2 / 5040.0
    } else {
        u.sin() / u
    };
    sinc * (rho / w)
}

/// Boundary weights at `x0`, failing when `x0` is not a usable bulk point.
pub fn bulk_weights(params: &JacobiParameters, x0: f64, beta1: Option<f64>) -> Result<WeightBundle> {
    let wb = weights(params, x0, beta1)?;
    if !(wb.w > 0.0) {
        return Err(Error::NonPositiveWeight { x: x0, w: wb.w });
    }
    Ok(wb)
}

/// Scaled first-kind kernel with a known weight `w(x0) > 0`.
pub fn scaled_kernel_with_weight(
    params: &JacobiParameters,
    x0: f64,
    w: f64,
    a: Complex64,
    b: Complex64,
    n: usize,
    mode: ScaleMode,
) -> Result<KernelSample> {
    if n == 0 {
        return Err(Error::CountTooSmall { min: 1, got: 0 });
    }
    if !(w > 0.0) {
        return Err(Error::NonPositiveWeight { x: x0, w });
    }
    let diag = diagonal_kernel(params, x0, n)?;
    let (scale, norm, target) = match mode {
        ScaleMode::ByN => {
            let rho_hat = diag * w / n as f64;
            (n as f64, n as f64, sine_target(rho_hat, w, a, b))
        }
        ScaleMode::ByDiag => (w * diag, diag, sine_target(1.0, 1.0, a, b)),
    };
    let value = if a == b && a == c(0.0) {
        c(diag)
    } else {
        let pa = first_kind(params, a / scale + x0, n)?;
        let pb = if a == b { pa.clone() } else { first_kind(params, b / scale + x0, n)? };
        bilinear(&pa, &pb)
    } / norm;
    Ok(KernelSample { n, x0, a, b, value, target, abs_err: (value - target).norm() })
}

pub fn scaled_kernel(
    params: &JacobiParameters,
    x0: f64,
    a: Complex64,
    b: Complex64,
    n: usize,
    mode: ScaleMode,
) -> Result<KernelSample> {
    let wb = bulk_weights(params, x0, None)?;
    scaled_kernel_with_weight(params, x0, wb.w, a, b, n, mode)
}

/// Second-kind kernel `sum q_j(x) q_j(y)` with a known second-kind weight.
pub fn second_kind_kernel_with_weight(
    params: &JacobiParameters,
    x0: f64,
    w_tilde: f64,
    a: Complex64,
    b: Complex64,
    n: usize,
) -> Result<KernelSample> {
    if n == 0 {
        return Err(Error::CountTooSmall { min: 1, got: 0 });
    }
    if !(w_tilde > 0.0) {
        return Err(Error::NonPositiveWeight { x: x0, w: w_tilde });
    }
    let nf = n as f64;
    let q0 = second_kind(params, c(x0), n)?;
    let diag: f64 = q0.iter().map(|q| q.re * q.re).sum();
    let qa = second_kind(params, a / nf + x0, n)?;
    let qb = if a == b { qa.clone() } else { second_kind(params, b / nf + x0, n)? };
    let value = bilinear(&qa, &qb) / nf;
    let rho_hat = diag * w_tilde / nf;
    let target = if rho_hat > 0.0 { sine_target(rho_hat, w_tilde, a, b) } else { c(0.0) };
    Ok(KernelSample { n, x0, a, b, value, target, abs_err: (value - target).norm() })
}

pub fn second_kind_kernel(
    params: &JacobiParameters,
    x0: f64,
    a: Complex64,
    b: Complex64,
    n: usize,
) -> Result<KernelSample> {
    let wb = bulk_weights(params, x0, None)?;
    let w_tilde = wb.w_tilde.ok_or(Error::UndefinedSecondKindWeight { x: x0 })?;
    second_kind_kernel_with_weight(params, x0, w_tilde, a, b, n)
}

/// Symmetrized mixed kernel and its predicted large-`n` limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedKernel {
    pub value: Complex64,
    pub predicted_limit: Complex64,
    /// `K_n(x0, x0) w(x0) / n`.
    pub rho_hat: f64,
    pub boundary_f: Complex64,
}

/// `(1/n) sum_j [p_j(x0+a/n) q_j(x0+b/n) + p_j(x0+b/n) q_j(x0+a/n)]`.
///
/// The predicted limit is `-2 Re F(x0+i0) sin(pi rho (b-a)) / (pi w (b-a))`.
/// The sign is the one forced by `p^(b) = p - b q` together with the
/// rank-one weight `w / (1 + 2 b Re F + b^2 |F|^2)`; at `a = b = 0` it
/// reduces to `lim (1/n) sum p_j q_j = -Re F rho / w`.
pub fn mixed_symmetrized_kernel(
    params: &JacobiParameters,
    x0: f64,
    a: Complex64,
    b: Complex64,
    n: usize,
) -> Result<MixedKernel> {
    if n == 0 {
        return Err(Error::CountTooSmall { min: 1, got: 0 });
    }
    let wb = bulk_weights(params, x0, None)?;
    let nf = n as f64;
    let za = a / nf + x0;
    let zb = b / nf + x0;
    let (pa, qa) = (first_kind(params, za, n)?, second_kind(params, za, n)?);
    let (pb, qb) =
        if a == b { (pa.clone(), qa.clone()) } else { (first_kind(params, zb, n)?, second_kind(params, zb, n)?) };
    let value = (bilinear(&pa, &qb) + bilinear(&pb, &qa)) / nf;
    let rho_hat = diagonal_kernel(params, x0, n)? * wb.w / nf;
    let predicted_limit = sine_target(rho_hat, wb.w, a, b) * (-2.0 * wb.f.re);
    Ok(MixedKernel { value, predicted_limit, rho_hat, boundary_f: wb.f })
}

/// Both sides of `K^(b1)_n = K_n + b1^2 K~_n - b1 (sum q_j(x) p_j(y) + sum q_j(y) p_j(x))`.
///
/// The left side runs the recurrence of the perturbed parameters; the right
/// side uses only the unperturbed first- and second-kind polynomials.
pub fn perturbed_kernel_expansion(
    params: &JacobiParameters,
    beta1: f64,
    x: Complex64,
    y: Complex64,
    n: usize,
) -> Result<(Complex64, Complex64)> {
    if n == 0 {
        return Err(Error::CountTooSmall { min: 1, got: 0 });
    }
    let perturbed = apply(params, &PerturbationSpec::RankOne { beta1 })?;
    let lhs = bilinear(&first_kind(&perturbed, x, n)?, &first_kind(&perturbed, y, n)?);
    let (px, qx) = (first_kind(params, x, n)?, second_kind(params, x, n)?);
    let (py, qy) = (first_kind(params, y, n)?, second_kind(params, y, n)?);
    let rhs =
        bilinear(&px, &py) + bilinear(&qx, &qy) * (beta1 * beta1) - (bilinear(&qx, &py) + bilinear(&qy, &px)) * beta1;
    Ok((lhs, rhs))
}

/// `(1/n) sum_{j<n} ||Phi_j(x0 + a/n)||_F^2`, with `Phi_0 = I`.
pub fn transfer_average(params: &JacobiParameters, x0: f64, a: Complex64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::CountTooSmall { min: 1, got: 0 });
    }
    let z = a / n as f64 + x0;
    let mut p = Stepper::first_kind(params, z);
    let mut q = Stepper::second_kind(params, z);
    let frob = |p: &Stepper<'_, Complex64>, q: &Stepper<'_, Complex64>| {
        p.value().norm_sqr() + p.lagged().norm_sqr() + q.value().norm_sqr() + q.lagged().norm_sqr()
    };
    let mut sum = frob(&p, &q);
    for _ in 1..n {
        p.step()?;
        q.step()?;
        sum += frob(&p, &q);
    }
    if !sum.is_finite() {
        return Err(Error::Overflow { index: n - 1 });
    }
    Ok(sum / n as f64)
}

/// Relative growth below which `K_n(x, x)` counts as saturated.
pub const SATURATION_TOL: f64 = 1e-6;
/// Growth factor per doubling above which `K_n(x, x)` counts as diverging.
pub const DIVERGENCE_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointMassVerdict {
    /// `K_n(x, x)` keeps growing: no point mass at `x`.
    Diverges,
    /// `K_n(x, x)` has converged to the given value, `1 / mu({x})`.
    Saturates(f64),
    Inconclusive,
}

impl PointMassVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            PointMassVerdict::Diverges => "diverges",
            PointMassVerdict::Saturates(_) => "saturates",
            PointMassVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Classifies the growth of `K_n(x, x)` from `K_n` and `K_2n`.
pub fn point_mass_verdict(k_n: f64, k_2n: f64) -> PointMassVerdict {
    if (k_2n - k_n) / k_n < SATURATION_TOL {
        PointMassVerdict::Saturates(k_2n)
    } else if k_2n / k_n >= DIVERGENCE_FACTOR {
        PointMassVerdict::Diverges
    } else {
        PointMassVerdict::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniversalityReport {
    pub x0: f64,
    pub n_list: Vec<usize>,
    /// Boundary weights at `x0`, or `None` when `x0` is not a bulk point.
    pub weights: Option<WeightBundle>,
    /// `K_n(x0, x0) w(x0) / n` per ladder entry.
    pub rho_hat: Vec<Option<f64>>,
    /// `sup_grid |K_n(x0+a/n, x0+b/n)/n - sine_target(rho_hat, w)|`.
    pub sup_err: Vec<Option<f64>>,
    /// `K_n(x0, x0)` per ladder entry.
    pub diag_trace: Vec<f64>,
    /// `K_{2 n_max}(x0, x0)`, or `None` when `2 n_max` lies beyond the parameter horizon.
    pub diag_doubled: Option<f64>,
    pub point_mass_verdict: PointMassVerdict,
}

/// Scaled-kernel errors over a grid of `(a, b)` offsets for each `n` in a ladder.
pub fn universality_report(
    params: &JacobiParameters,
    x0: f64,
    n_list: &[usize],
    grid: &[(Complex64, Complex64)],
) -> Result<UniversalityReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("offset grid is empty"));
    }
    if n_list.is_empty() || n_list[0] == 0 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n ladder must be positive and strictly increasing"));
    }
    let n_max = *n_list.last().expect("nonempty");
    let diag_trace = diagonal_trace(params, x0, n_list)?;
    let diag_doubled = match diagonal_kernel(params, x0, 2 * n_max) {
        Ok(k) => Some(k),
        Err(Error::BeyondHorizon { .. }) => None,
        Err(e) => return Err(e),
    };

    let weights = bulk_weights(params, x0, None).ok();
    let mut rho_hat = Vec::with_capacity(n_list.len());
    let mut sup_err = Vec::with_capacity(n_list.len());
    for (&n, &diag) in n_list.iter().zip(&diag_trace) {
        match weights {
            Some(wb) => {
                let rho = diag * wb.w / n as f64;
                rho_hat.push(Some(rho));
                sup_err.push(Some(grid_sup_error(params, x0, wb.w, rho, n, grid)?));
            }
            None => {
                rho_hat.push(None);
                sup_err.push(None);
            }
        }
    }
    let point_mass_verdict = match diag_doubled {
        Some(k2) => point_mass_verdict(diag_trace[n_list.len() - 1], k2),
        None => PointMassVerdict::Inconclusive,
    };
    Ok(UniversalityReport {
        x0,
        n_list: n_list.to_vec(),
        weights,
        rho_hat,
        sup_err,
        diag_trace,
        diag_doubled,
        point_mass_verdict,
    })
}

/// Evaluates `p` once per distinct offset and combines pairs.
fn grid_sup_error(
    params: &JacobiParameters,
    x0: f64,
    w: f64,
    rho: f64,
    n: usize,
    grid: &[(Complex64, Complex64)],
) -> Result<f64> {
    let nf = n as f64;
    fn index(z: Complex64, offsets: &mut Vec<Complex64>) -> usize {
        match offsets.iter().position(|o| *o == z) {
            Some(i) => i,
            None => {
                offsets.push(z);
                offsets.len() - 1
            }
        }
    }
    let mut offsets: Vec<Complex64> = Vec::new();
    let pairs: Vec<(usize, usize)> =
        grid.iter().map(|&(a, b)| (index(a, &mut offsets), index(b, &mut offsets))).collect();
    let values = offsets.iter().map(|&o| first_kind(params, o / nf + x0, n)).collect::<Result<Vec<_>>>()?;
    let mut sup: f64 = 0.0;
    for (&(ia, ib), &(a, b)) in pairs.iter().zip(grid) {
        let k = bilinear(&values[ia], &values[ib]) / nf;
        sup = sup.max((k - sine_target(rho, w, a, b)).norm());
    }
    Ok(sup)
}

/// All pairs `(a, b)` with `a, b` drawn from `points`.
pub fn square_grid(points: &[Complex64]) -> Vec<(Complex64, Complex64)> {
    points.iter().flat_map(|&a| points.iter().map(move |&b| (a, b))).collect()
}

/// The real grid `a, b in {-2, -1, 0, 1, 2}`.
pub fn standard_grid() -> Vec<(Complex64, Complex64)> {
    let pts: Vec<Complex64> = (-2..=2).map(|k| c(k as f64)).collect();
    square_grid(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::Catalog;
    use approx::assert_relative_eq;

    fn free() -> JacobiParameters {
        JacobiParameters::catalog(Catalog::Free)
    }

    fn cheb() -> JacobiParameters {
        JacobiParameters::catalog(Catalog::Chebyshev1)
    }

    #[test]
    fn cd_kernel_small_cases() {
        for m in [KernelMethod::Sum, KernelMethod::CdFormula] {
            assert_eq!(cd_kernel(&free(), c(0.3), c(-0.7), 1, m).unwrap(), c(1.0));
        }
        assert_eq!(cd_kernel(&free(), c(0.0), c(0.0), 3, KernelMethod::Sum).unwrap(), c(2.0));
        // Coincident points fall back to the sum.
        assert_eq!(cd_kernel(&free(), c(0.0), c(0.0), 3, KernelMethod::CdFormula).unwrap(), c(2.0));
        let k = cd_kernel(&cheb(), c(0.0), c(0.0), 4, KernelMethod::Sum).unwrap();
        assert_relative_eq!(k.re, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn cd_formula_agrees_with_sum() {
        let (x, y) = (c(0.31), c(-0.52));
        let s = cd_kernel(&cheb(), x, y, 300, KernelMethod::Sum).unwrap();
        let f = cd_kernel(&cheb(), x, y, 300, KernelMethod::CdFormula).unwrap();
        assert!((s - f).norm() < 1e-10);
    }

    #[test]
    fn sine_target_examples() {
        let t = sine_target(1.0 / PI, 1.0 / PI, c(0.0), c(PI));
        assert!(t.norm() < 1e-15);
        let t = sine_target(0.4, 0.7, c(1.3), c(1.3));
        assert_relative_eq!(t.re, 0.4 / 0.7, epsilon = 1e-15);
        let t = sine_target(1.0 / PI, 2.0 / PI, c(0.0), c(1.0));
        assert_relative_eq!(t.re, 1f64.sin() / 2.0, epsilon = 1e-15);
        assert_relative_eq!(t.re, 0.420_735_492_403_948, epsilon = 1e-12);
        // Series and direct branches agree across the switch.
        let d = 1.0001e-4 / (PI * 0.3);
        let lo = sine_target(0.3, 1.0, c(0.0), c(d * 0.9998));
        let hi = sine_target(0.3, 1.0, c(0.0), c(d));
        assert!((lo - hi).norm() < 1e-12);
    }

    #[test]
    fn scaled_kernel_diagonal_limits() {
        let s = scaled_kernel(&cheb(), 0.0, c(0.0), c(0.0), 4096, ScaleMode::ByN).unwrap();
        assert!((s.value.re - 1.0).abs() < 0.02);
        let s = scaled_kernel(&free(), 0.0, c(0.0), c(0.0), 4096, ScaleMode::ByN).unwrap();
        assert!((s.value.re - 0.5).abs() < 0.01);
        let s = scaled_kernel(&free(), 0.2, c(0.0), c(0.0), 77, ScaleMode::ByDiag).unwrap();
        assert_eq!(s.value, c(1.0));
    }

    #[test]
    fn second_kind_kernel_limits() {
        let s = second_kind_kernel(&free(), 0.0, c(0.3), c(-0.1), 1).unwrap();
        assert_eq!(s.value, c(0.0));
        let s = second_kind_kernel(&free(), 0.0, c(0.0), c(0.0), 4096).unwrap();
        assert!((s.value.re - 2.0).abs() < 0.04);
        let s = second_kind_kernel(&cheb(), 0.0, c(0.0), c(0.0), 4096).unwrap();
        assert!((s.value.re - 1.0).abs() < 0.02);
    }

    #[test]
    fn mixed_kernel_free_measure() {
        let m = mixed_symmetrized_kernel(&free(), 0.0, c(1.0), c(-2.0), 4096).unwrap();
        assert!(m.value.norm() <= 0.05);
        assert!(m.predicted_limit.norm() < 1e-6);

        // (1/n) sum 2 p_j q_j at x = 0.3 with p_j = U_j, q_j = 2 U_{j-1} tends to 2x/(1-x^2).
        let m = mixed_symmetrized_kernel(&free(), 0.3, c(0.0), c(0.0), 8192).unwrap();
        let oracle = 0.6 / 0.91;
        assert!((m.value.re - oracle).abs() < 0.05 * oracle);
        assert!((m.predicted_limit.re - oracle).abs() < 0.05 * oracle);

        let m = mixed_symmetrized_kernel(&cheb(), 0.3, c(0.0), c(0.0), 2048).unwrap();
        assert!(m.predicted_limit.norm() < 1e-6);
    }

    #[test]
    fn expansion_examples() {
        let (l, r) = perturbed_kernel_expansion(&free(), 0.0, c(0.2), c(0.4), 50).unwrap();
        assert_eq!(l, r);
        let (l, r) = perturbed_kernel_expansion(&free(), 0.3, c(0.1), c(-0.2), 500).unwrap();
        assert!((l - r).norm() <= 1e-10 * (1.0 + l.norm()));
        let (l, r) = perturbed_kernel_expansion(&free(), 1.0, c(1.25), c(1.25), 60).unwrap();
        assert!((l.re - 4.0 / 3.0).abs() < 1e-12);
        // The right side cancels 2^j growth down to 2^-j, so only a relative check applies.
        assert!((l - r).norm() <= 1e-10 * r.norm().max(1.0) * 4f64.powi(30));
    }

    #[test]
    fn transfer_average_examples() {
        assert_eq!(transfer_average(&free(), 0.0, c(0.0), 1).unwrap(), 2.0);
        let t1 = transfer_average(&free(), 0.0, c(0.0), 10_000).unwrap();
        let t2 = transfer_average(&free(), 0.0, c(0.0), 20_000).unwrap();
        assert!((t1 - 3.125).abs() < 1e-3);
        assert!((t1 - t2).abs() < 0.05 * t1);
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(point_mass_verdict(4.0 / 3.0, 4.0 / 3.0), PointMassVerdict::Saturates(4.0 / 3.0));
        assert_eq!(point_mass_verdict(100.0, 200.0), PointMassVerdict::Diverges);
        assert_eq!(point_mass_verdict(100.0, 120.0), PointMassVerdict::Inconclusive);
    }

    #[test]
    fn report_degenerate_and_empty() {
        let r = universality_report(&free(), 0.0, &[1], &standard_grid()).unwrap();
        assert_relative_eq!(r.rho_hat[0].unwrap(), 2.0 / PI, max_relative = 1e-9);
        assert_eq!(r.diag_trace, alloc::vec![1.0]);
        assert!(universality_report(&free(), 0.0, &[4], &[]).is_err());
        assert!(universality_report(&free(), 0.0, &[8, 4], &standard_grid()).is_err());
    }

    #[test]
    fn report_point_mass_saturates() {
        let p = apply(&free(), &PerturbationSpec::RankOne { beta1: 1.0 }).unwrap();
        let r = universality_report(&p, 1.25, &[256, 512], &standard_grid()).unwrap();
        assert!(r.weights.is_none());
        match r.point_mass_verdict {
            PointMassVerdict::Saturates(v) => assert!((v - 4.0 / 3.0).abs() < 1e-12),
            other => panic!("expected saturation, got {other:?}"),
        }
    }

    #[test]
    fn diagonal_kernel_survives_decay_past_underflow() {
        let p = apply(&free(), &PerturbationSpec::RankOne { beta1: 1.0 }).unwrap();
        for n in [2048, 4096, 20_000] {
            assert_eq!(diagonal_kernel(&p, 1.25, n).unwrap(), 4.0 / 3.0);
        }
        let trace = diagonal_trace(&p, 1.25, &[10, 4096]).unwrap();
        assert_eq!(trace[1], 4.0 / 3.0);
    }

    #[test]
    fn diagonal_kernel_matches_plain_recurrence() {
        for (params, x) in [(free(), 0.3), (cheb(), -0.7), (free(), 1.02)] {
            let mut s = Stepper::first_kind(&params, x);
            let mut plain = 1.0;
            for _ in 1..600 {
                let v = s.step().unwrap();
                plain += v * v;
            }
            assert_eq!(diagonal_kernel(&params, x, 600).unwrap(), plain);
        }
        // Growth beyond the f64 range is reported, not wrapped.
        assert!(matches!(diagonal_kernel(&free(), 3.0, 5000), Err(Error::Overflow { .. })));
    }
}
