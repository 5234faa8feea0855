//! Jacobi parameters, first/second-kind orthonormal polynomials and transfer matrices.
//!
//! Parameters are 1-indexed (`a(1), b(1), ...`) and polynomial arrays are
//! 0-indexed (`p[0] = p_0 = 1`). A parameter sequence is a finite head
//! followed by a constant tail, which covers every measure the crate works
//! with: the catalog measures, finite perturbations, and infinite
//! perturbations materialized up to an experiment horizon.

use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};
use core::str::FromStr;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Scalar types the three-term recurrence runs over.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + Neg<Output = Self>
{
    fn from_real(x: f64) -> Self;
    fn is_finite_value(self) -> bool;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Jacobi parameters `{a_n, b_n}` with a finite head and a constant tail.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiParameters {
    head_a: Vec<f64>,
    head_b: Vec<f64>,
    tail_a: f64,
    tail_b: f64,
    horizon: Option<usize>,
}

/// Named measures with closed-form weights and transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Catalog {
    /// Semicircle weight `(2/pi) sqrt(1 - x^2)` on `[-1, 1]`; `a_n = 1/2`, `b_n = 0`.
    Free,
    /// Arcsine weight `1/(pi sqrt(1 - x^2))`; `a_1 = 1/sqrt(2)`, then `a_n = 1/2`.
    Chebyshev1,
}

impl Catalog {
    pub fn name(self) -> &'static str {
        match self {
            Catalog::Free => "free",
            Catalog::Chebyshev1 => "chebyshev1",
        }
    }
}

impl fmt::Display for Catalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Catalog {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(Catalog::Free),
            "chebyshev1" => Ok(Catalog::Chebyshev1),
            _ => Err(Error::InvalidArgument("unknown catalog measure")),
        }
    }
}

impl JacobiParameters {
    /// Builds a custom parameter set, validating `a > 0` and finiteness.
    pub fn new(head_a: Vec<f64>, head_b: Vec<f64>, tail_a: f64, tail_b: f64) -> Result<Self> {
        for (i, &a) in head_a.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::NonFinite { name: "head_a" });
            }
            if a <= 0.0 {
                return Err(Error::NonPositiveA { index: i + 1, value: a });
            }
        }
        if head_b.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite { name: "head_b" });
        }
        if !tail_a.is_finite() {
            return Err(Error::NonFinite { name: "tail_a" });
        }
        if tail_a <= 0.0 {
            return Err(Error::NonPositiveA { index: head_a.len() + 1, value: tail_a });
        }
        if !tail_b.is_finite() {
            return Err(Error::NonFinite { name: "tail_b" });
        }
        Ok(JacobiParameters { head_a, head_b, tail_a, tail_b, horizon: None })
    }

    pub fn catalog(which: Catalog) -> Self {
        match which {
            Catalog::Free => {
                JacobiParameters { head_a: Vec::new(), head_b: Vec::new(), tail_a: 0.5, tail_b: 0.0, horizon: None }
            }
            Catalog::Chebyshev1 => JacobiParameters {
                head_a: alloc::vec![core::f64::consts::FRAC_1_SQRT_2],
                head_b: Vec::new(),
                tail_a: 0.5,
                tail_b: 0.0,
                horizon: None,
            },
        }
    }

    /// `a(n)`, 1-indexed.
    #[inline]
    pub fn a(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        self.head_a.get(n.wrapping_sub(1)).copied().unwrap_or(self.tail_a)
    }

    /// `b(n)`, 1-indexed.
    #[inline]
    pub fn b(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        self.head_b.get(n.wrapping_sub(1)).copied().unwrap_or(self.tail_b)
    }

    pub fn head_a(&self) -> &[f64] {
        &self.head_a
    }

    pub fn head_b(&self) -> &[f64] {
        &self.head_b
    }

    pub fn tail_a(&self) -> f64 {
        self.tail_a
    }

    pub fn tail_b(&self) -> f64 {
        self.tail_b
    }

    /// Number of indices before the constant tail takes over on both sequences.
    pub fn head_len(&self) -> usize {
        self.head_a.len().max(self.head_b.len())
    }

    /// `inf_n a_n`.
    pub fn alpha_minus(&self) -> f64 {
        self.head_a.iter().copied().fold(self.tail_a, f64::min)
    }

    /// `sup_n (a_n + |b_n|)`.
    pub fn sup_bound(&self) -> f64 {
        let m = self.head_len();
        (1..=m + 1).map(|n| self.a(n) + self.b(n).abs()).fold(0.0, f64::max)
    }

    /// Essential spectrum `[tail_b - 2 tail_a, tail_b + 2 tail_a]`.
    pub fn essential_spectrum(&self) -> (f64, f64) {
        (self.tail_b - 2.0 * self.tail_a, self.tail_b + 2.0 * self.tail_a)
    }

    /// Largest index the recurrence may consult, if limited.
    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = Some(horizon);
        self
    }

    /// Fails when `index` lies beyond the materialized horizon.
    #[inline]
    pub fn check_index(&self, index: usize) -> Result<()> {
        match self.horizon {
            Some(h) if index > h => Err(Error::BeyondHorizon { index, horizon: h }),
            _ => Ok(()),
        }
    }

    /// Replaces `b(n)` by `b(n) + shift(n)` for `n = 1..=len`.
    pub(crate) fn shift_diagonal(&self, shifts: &[f64]) -> Self {
        let len = shifts.len().max(self.head_b.len());
        let head_b = (1..=len).map(|n| self.b(n) + shifts.get(n - 1).copied().unwrap_or(0.0)).collect();
        JacobiParameters { head_b, ..self.clone() }
    }
}

/// First- and second-kind polynomial values `p_0..p_{n-1}`, `q_0..q_{n-1}` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyEval {
    pub z: Complex64,
    pub p: Vec<Complex64>,
    pub q: Vec<Complex64>,
}

impl PolyEval {
    pub fn n(&self) -> usize {
        self.p.len()
    }
}

/// One solution of the three-term recurrence, advanced index by index.
///
/// The state at index `k` is the column `(y_k, a_k y_{k-1})`, which is what the
/// one-step matrix acts on. `k = 0` carries `(y_0, a_0 y_{-1})`: `(1, 0)` for
/// the first kind and `(0, -1)` for the second kind.
#[derive(Debug, Clone)]
pub struct Stepper<'a, T> {
    params: &'a JacobiParameters,
    z: T,
    k: usize,
    y: T,
    lagged: T,
}

impl<'a, T: Scalar> Stepper<'a, T> {
    pub fn first_kind(params: &'a JacobiParameters, z: T) -> Self {
        Stepper { params, z, k: 0, y: T::from_real(1.0), lagged: T::from_real(0.0) }
    }

    pub fn second_kind(params: &'a JacobiParameters, z: T) -> Self {
        Stepper { params, z, k: 0, y: T::from_real(0.0), lagged: T::from_real(-1.0) }
    }

    /// Current index `k`.
    #[inline]
    pub fn index(&self) -> usize {
        self.k
    }

    /// `y_k`.
    #[inline]
    pub fn value(&self) -> T {
        self.y
    }

    /// `a_k y_{k-1}`.
    #[inline]
    pub fn lagged(&self) -> T {
        self.lagged
    }

    /// Advances to `k + 1` and returns the new value.
    #[inline]
    pub fn step(&mut self) -> Result<T> {
        let k = self.k + 1;
        self.params.check_index(k)?;
        let a = self.params.a(k);
        let b = self.params.b(k);
        let next = ((self.z - T::from_real(b)) * self.y - self.lagged) / a;
        if !next.is_finite_value() {
            return Err(Error::Overflow { index: k });
        }
        self.lagged = self.y * a;
        self.y = next;
        self.k = k;
        Ok(next)
    }
}

/// Fills `y_0..y_{n-1}` for a recurrence solution.
pub(crate) fn solution_values<T: Scalar>(mut stepper: Stepper<'_, T>, n: usize) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    out.push(stepper.value());
    for _ in 1..n {
        out.push(stepper.step()?);
    }
    Ok(out)
}

/// Real-point values `p_0..p_{n-1}` and `q_0..q_{n-1}`.
pub fn eval_pq_real(params: &JacobiParameters, x: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::CountTooSmall { min: 1, got: 0 });
    }
    let p = solution_values(Stepper::first_kind(params, x), n)?;
    let q = solution_values(Stepper::second_kind(params, x), n)?;
    Ok((p, q))
}

/// Evaluates `p_0..p_{n-1}` and `q_0..q_{n-1}` at `z` by forward recurrence.
pub fn eval_pq(params: &JacobiParameters, z: Complex64, n: usize) -> Result<PolyEval> {
    if n == 0 {
        return Err(Error::CountTooSmall { min: 1, got: 0 });
    }
    let p = solution_values(Stepper::first_kind(params, z), n)?;
    let q = solution_values(Stepper::second_kind(params, z), n)?;
    Ok(PolyEval { z, p, q })
}

/// A 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix(pub [[Complex64; 2]; 2]);

impl TransferMatrix {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        TransferMatrix([[one, zero], [zero, one]])
    }

    /// One-step matrix `S_j(z) = [[(z - b_j)/a_j, -1/a_j], [a_j, 0]]`.
    pub fn one_step(params: &JacobiParameters, j: usize, z: Complex64) -> Self {
        let a = params.a(j);
        let b = params.b(j);
        TransferMatrix([
            [(z - b) / a, Complex64::new(-1.0 / a, 0.0)],
            [Complex64::new(a, 0.0), Complex64::new(0.0, 0.0)],
        ])
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn inverse(&self) -> Self {
        let m = &self.0;
        let d = self.det();
        TransferMatrix([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.0.iter().flatten().map(|c| c.norm_sqr()).sum()
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        let f = self.frobenius_sq();
        let d = self.det().norm();
        let disc = (f * f - 4.0 * d * d).max(0.0);
        ((f + disc.sqrt()) / 2.0).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        let (l, r) = (&self.0, &rhs.0);
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = l[i][0] * r[0][j] + l[i][1] * r[1][j];
            }
        }
        TransferMatrix(out)
    }
}

/// `Phi_n(z) = S_n(z) ... S_1(z)`, formed as an explicit matrix product.
pub fn transfer(params: &JacobiParameters, z: Complex64, n: usize) -> Result<TransferMatrix> {
    if n == 0 {
        return Err(Error::CountTooSmall { min: 1, got: 0 });
    }
    let mut phi = TransferMatrix::identity();
    for j in 1..=n {
        params.check_index(j)?;
        phi = TransferMatrix::one_step(params, j, z) * phi;
        if !phi.is_finite() {
            return Err(Error::Overflow { index: j });
        }
    }
    Ok(phi)
}

/// Drops the first row and column: returns `{a(n+1), b(n+1)}` and the mass factor `a(1)^2`.
///
/// The stripped parameters are the orthonormalizing parameters of `a_1 q_{n+1}`;
/// the second-kind measure is `a(1)^2` times the stripped measure.
pub fn strip(params: &JacobiParameters) -> (JacobiParameters, f64) {
    let drop_first = |v: &[f64]| v.iter().skip(1).copied().collect::<Vec<_>>();
    let stripped = JacobiParameters {
        head_a: drop_first(&params.head_a),
        head_b: drop_first(&params.head_b),
        tail_a: params.tail_a,
        tail_b: params.tail_b,
        horizon: params.horizon.map(|h| h.saturating_sub(1)),
    };
    let a1 = params.a(1);
    (stripped, a1 * a1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn catalog_entries() {
        let free = JacobiParameters::catalog(Catalog::Free);
        for n in 1..10 {
            assert_eq!(free.a(n), 0.5);
            assert_eq!(free.b(n), 0.0);
        }
        let cheb = JacobiParameters::catalog(Catalog::Chebyshev1);
        assert_relative_eq!(cheb.a(1), 0.707_106_781_186_547_5, epsilon = 1e-15);
        assert_eq!(cheb.a(2), 0.5);
        assert_eq!(cheb.alpha_minus(), 0.5);
        assert_eq!("chebyshev1".parse::<Catalog>().unwrap(), Catalog::Chebyshev1);
        assert!("legendre".parse::<Catalog>().is_err());
    }

    #[test]
    fn chebyshev1_recurrence_matches_sqrt2_tn() {
        // p_n = sqrt(2) T_n, so x p_1 = a_2 p_2 + a_1 p_0 pins a_1 and a_2.
        let cheb = JacobiParameters::catalog(Catalog::Chebyshev1);
        let x = 0.37;
        let (p, _) = eval_pq_real(&cheb, x, 6).unwrap();
        let t = [1.0, x, 2.0 * x * x - 1.0];
        assert_relative_eq!(p[1], 2f64.sqrt() * t[1], epsilon = 1e-14);
        assert_relative_eq!(p[2], 2f64.sqrt() * t[2], epsilon = 1e-14);
        assert_relative_eq!(x * p[1], cheb.a(2) * p[2] + cheb.a(1) * p[0], epsilon = 1e-14);
    }

    #[test]
    fn custom_rejects_nonpositive_a() {
        let err = JacobiParameters::new(vec![0.5, 0.0], vec![], 0.3, 0.0).unwrap_err();
        assert_eq!(err, Error::NonPositiveA { index: 2, value: 0.0 });
        assert!(JacobiParameters::new(vec![], vec![], -1.0, 0.0).is_err());
        assert!(JacobiParameters::new(vec![0.5], vec![f64::NAN], 0.3, 0.0).is_err());
    }

    #[test]
    fn eval_pq_free_at_zero() {
        let free = JacobiParameters::catalog(Catalog::Free);
        let e = eval_pq(&free, c(0.0), 4).unwrap();
        assert_eq!(e.p, vec![c(1.0), c(0.0), c(-1.0), c(0.0)]);
        assert_eq!(e.q, vec![c(0.0), c(2.0), c(0.0), c(-2.0)]);
    }

    #[test]
    fn eval_pq_free_outside_spectrum() {
        let free = JacobiParameters::catalog(Catalog::Free);
        let e = eval_pq(&free, c(1.25), 3).unwrap();
        assert_eq!(e.p, vec![c(1.0), c(2.5), c(5.25)]);
        assert_eq!(e.q, vec![c(0.0), c(2.0), c(5.0)]);
    }

    #[test]
    fn eval_pq_single_and_zero_count() {
        let cheb = JacobiParameters::catalog(Catalog::Chebyshev1);
        let e = eval_pq(&cheb, Complex64::new(0.3, -2.0), 1).unwrap();
        assert_eq!(e.p, vec![c(1.0)]);
        assert_eq!(e.q, vec![c(0.0)]);
        assert_eq!(eval_pq(&cheb, c(0.0), 0).unwrap_err(), Error::CountTooSmall { min: 1, got: 0 });
    }

    #[test]
    fn eval_pq_reports_overflow_index() {
        let free = JacobiParameters::catalog(Catalog::Free);
        match eval_pq(&free, c(1e6), 200) {
            Err(Error::Overflow { index }) => assert!(index > 10 && index < 200),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn transfer_examples() {
        let free = JacobiParameters::catalog(Catalog::Free);
        let phi = transfer(&free, c(0.0), 1).unwrap();
        assert_eq!(phi.0, [[c(0.0), c(-2.0)], [c(0.5), c(0.0)]]);
        let phi3 = transfer(&free, c(0.0), 3).unwrap();
        assert_eq!(phi3.0[0][0], c(0.0));
        assert_eq!(phi3.0[1][0], c(-0.5));
        assert_eq!(phi3.det(), c(1.0));
    }

    #[test]
    fn transfer_norm_equals_inverse_norm() {
        let cheb = JacobiParameters::catalog(Catalog::Chebyshev1);
        let phi = transfer(&cheb, Complex64::new(0.4, 0.05), 57).unwrap();
        let inv = phi.inverse();
        assert_relative_eq!(phi.operator_norm(), inv.operator_norm(), max_relative = 1e-10);
        assert_relative_eq!(phi.frobenius_sq(), inv.frobenius_sq(), max_relative = 1e-10);
    }

    #[test]
    fn strip_examples() {
        let free = JacobiParameters::catalog(Catalog::Free);
        let (s, m) = strip(&free);
        assert_eq!(s, free);
        assert_eq!(m, 0.25);

        let (s, m) = strip(&JacobiParameters::catalog(Catalog::Chebyshev1));
        assert_eq!(s, free);
        assert_relative_eq!(m, 0.5, epsilon = 1e-15);

        let custom = JacobiParameters::new(vec![0.9, 0.6], vec![0.1, -0.2, 0.3], 0.4, 0.05).unwrap();
        let (s, m) = strip(&custom);
        assert_eq!(s.head_a(), &[0.6]);
        assert_eq!(s.head_b(), &[-0.2, 0.3]);
        assert_relative_eq!(m, 0.81, epsilon = 1e-15);
    }

    #[test]
    fn horizon_is_enforced() {
        let p = JacobiParameters::catalog(Catalog::Free).with_horizon(10);
        assert!(eval_pq(&p, c(0.1), 11).is_ok());
        assert_eq!(eval_pq(&p, c(0.1), 12).unwrap_err(), Error::BeyondHorizon { index: 11, horizon: 10 });
        assert!(transfer(&p, c(0.1), 10).is_ok());
        assert!(transfer(&p, c(0.1), 11).is_err());
    }

    #[test]
    fn real_point_gives_real_values() {
        let custom = JacobiParameters::new(vec![0.9, 0.6], vec![0.1, -0.2], 0.4, 0.05).unwrap();
        let e = eval_pq(&custom, c(0.31), 300).unwrap();
        assert!(e.p.iter().chain(e.q.iter()).all(|v| v.im == 0.0));
    }
}
