//! Diagonal perturbations `b_n -> b_n + beta_n` and their variation-of-parameters coefficients.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution as _, StandardNormal};

use crate::error::{Error, Result};
use crate::jacobi::{JacobiParameters, Stepper};

/// Zero-mean, unit-variance laws for random diagonal entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    Rademacher,
    UniformSymmetric,
    Gaussian,
}

impl Distribution {
    pub fn name(self) -> &'static str {
        match self {
            Distribution::Rademacher => "rademacher",
            Distribution::UniformSymmetric => "uniform_symmetric",
            Distribution::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rademacher" => Ok(Distribution::Rademacher),
            "uniform_symmetric" | "uniform" => Ok(Distribution::UniformSymmetric),
            "gaussian" | "normal" => Ok(Distribution::Gaussian),
            _ => Err(Error::InvalidArgument("unknown distribution")),
        }
    }
}

/// Independent draws `beta_k = c k^-gamma X_k`, `X_k` zero-mean with unit variance.
///
/// Each index owns the ChaCha stream `k` under the given seed, so any single
/// entry can be regenerated without the others.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomDiagonal {
    pub amplitude: f64,
    pub exponent: f64,
    pub distribution: Distribution,
    pub seed: u64,
    pub horizon: usize,
}

impl RandomDiagonal {
    /// `E(beta_k^2) = c^2 k^(-2 gamma)`.
    pub fn variance(&self, k: usize) -> f64 {
        self.amplitude * self.amplitude * (k as f64).powf(-2.0 * self.exponent)
    }

    /// The unit-variance draw `X_k`.
    pub fn unit_draw(&self, k: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64);
        match self.distribution {
            Distribution::Rademacher => {
                if rng.next_u32() & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Distribution::UniformSymmetric => {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                3f64.sqrt() * (2.0 * u - 1.0)
            }
            Distribution::Gaussian => StandardNormal.sample(&mut rng),
        }
    }

    pub fn beta(&self, k: usize) -> f64 {
        self.amplitude * (k as f64).powf(-self.exponent) * self.unit_draw(k)
    }

    /// `beta_1..beta_horizon`.
    pub fn betas(&self) -> Vec<f64> {
        (1..=self.horizon).map(|k| self.beta(k)).collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidArgument("amplitude must be positive"));
        }
        if !(self.exponent > 0.0 && self.exponent.is_finite()) {
            return Err(Error::InvalidArgument("exponent must be positive"));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationSpec {
    /// `b_1 -> b_1 + beta1`.
    RankOne {
        beta1: f64,
    },
    /// `b_k -> b_k + betas[k-1]` for the listed entries.
    Diagonal {
        betas: Vec<f64>,
    },
    RandomDiagonal(RandomDiagonal),
}

impl PerturbationSpec {
    /// `sum_k beta_k` as a list, materialized up to the horizon for random specs.
    pub fn shifts(&self) -> Result<Vec<f64>> {
        match self {
            PerturbationSpec::RankOne { beta1 } => Ok(alloc::vec![*beta1]),
            PerturbationSpec::Diagonal { betas } => Ok(betas.clone()),
            PerturbationSpec::RandomDiagonal(r) => {
                r.validate()?;
                Ok(r.betas())
            }
        }
    }
}

/// Applies `b_n -> b_n + beta_n`; the off-diagonal is untouched.
///
/// Random perturbations limit the result's horizon: the recurrence refuses
/// to read `b_n` past the materialized entries.
pub fn apply(params: &JacobiParameters, spec: &PerturbationSpec) -> Result<JacobiParameters> {
    let shifts = spec.shifts()?;
    if shifts.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonFinite { name: "perturbation" });
    }
    let mut out = params.shift_diagonal(&shifts);
    if let PerturbationSpec::RandomDiagonal(r) = spec {
        let h = params.horizon().map_or(r.horizon, |h| h.min(r.horizon));
        out = out.with_horizon(h);
    }
    Ok(out)
}

/// Increments below this over the final tenth of the trace count as converged.
pub const CONVERGENCE_TOL: f64 = 1e-6;

/// Coefficients of the perturbed solutions in the unperturbed basis `(p_k, q_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarParTrace {
    pub x: f64,
    /// `u[k-1] = (u_{1,k}, u_{2,k})` for `k = 1..=N`.
    pub u: Vec<[f64; 2]>,
    /// `v[k-1] = (v_{1,k}, v_{2,k})`.
    pub v: Vec<[f64; 2]>,
    pub converged_u: bool,
    pub converged_v: bool,
    /// Largest increment `|u_k - u_{k-1}|` over the convergence window.
    pub last_increment_u: f64,
    pub last_increment_v: f64,
    /// Largest relative residual of the defining 2x2 systems.
    pub max_residual: f64,
}

fn solve_coefficients(
    k: usize,
    a_k: f64,
    (p, p_prev): (f64, f64),
    (q, q_prev): (f64, f64),
    (y, y_prev): (f64, f64),
) -> Result<([f64; 2], f64)> {
    // Determinant p_k q_{k-1} - q_k p_{k-1} is -1/a_k by the Wronskian identity.
    let det = p * q_prev - q * p_prev;
    if !((det * a_k + 1.0).abs() < 1e-6) {
        return Err(Error::SingularSystem { k });
    }
    let c1 = (y * q_prev - q * y_prev) / det;
    let c2 = (p * y_prev - p_prev * y) / det;
    let r1 = (y - (c1 * p + c2 * q)).abs() / (y.abs() + (c1 * p).abs() + (c2 * q).abs()).max(f64::MIN_POSITIVE);
    let r0 = (y_prev - (c1 * p_prev + c2 * q_prev)).abs()
        / (y_prev.abs() + (c1 * p_prev).abs() + (c2 * q_prev).abs()).max(f64::MIN_POSITIVE);
    Ok(([c1, c2], r1.max(r0)))
}

/// Solves `p^(b)_k = u_1 p_k + u_2 q_k`, `p^(b)_{k-1} = u_1 p_{k-1} + u_2 q_{k-1}`
/// (and the same for `q^(b)` with `v`) for `k = 1..=N` at a real point.
pub fn variation_of_parameters(
    params: &JacobiParameters,
    spec: &PerturbationSpec,
    x: f64,
    n: usize,
) -> Result<VarParTrace> {
    if n < 2 {
        return Err(Error::CountTooSmall { min: 2, got: n });
    }
    let perturbed = apply(params, spec)?;
    let mut p = Stepper::first_kind(params, x);
    let mut q = Stepper::second_kind(params, x);
    let mut pb = Stepper::first_kind(&perturbed, x);
    let mut qb = Stepper::second_kind(&perturbed, x);

    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut max_residual: f64 = 0.0;
    for k in 1..=n {
        let prev = (p.value(), q.value(), pb.value(), qb.value());
        let cur = (p.step()?, q.step()?, pb.step()?, qb.step()?);
        let a_k = params.a(k);
        let (uk, ru) = solve_coefficients(k, a_k, (cur.0, prev.0), (cur.1, prev.1), (cur.2, prev.2))?;
        let (vk, rv) = solve_coefficients(k, a_k, (cur.0, prev.0), (cur.1, prev.1), (cur.3, prev.3))?;
        max_residual = max_residual.max(ru).max(rv);
        u.push(uk);
        v.push(vk);
    }

    let window = n.div_ceil(10);
    let last_increment = |c: &[[f64; 2]]| -> f64 {
        c.windows(2)
            .skip(n - 1 - window.min(n - 1))
            .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
            .fold(0.0, f64::max)
    };
    let last_increment_u = last_increment(&u);
    let last_increment_v = last_increment(&v);
    Ok(VarParTrace {
        x,
        converged_u: last_increment_u < CONVERGENCE_TOL,
        converged_v: last_increment_v < CONVERGENCE_TOL,
        u,
        v,
        last_increment_u,
        last_increment_v,
        max_residual,
    })
}

/// Partial sums of `sum_k s_k^2 (|p_k| + |p_{k-1}| + |q_k| + |q_{k-1}|)^4`.
#[derive(Debug, Clone, PartialEq)]
pub struct L2Partial {
    pub x: f64,
    pub n: usize,
    /// `sums[k-1] = S_k` for `k = 1..=2N`.
    pub sums: Vec<f64>,
    pub s_n: f64,
    pub s_2n: f64,
    /// `S_2N - S_N`.
    pub increment: f64,
    /// `S_2N - S_N <= rel_tol * S_N`.
    pub bounded: bool,
}

/// Evaluates the partial sums up to `2N` and the doubling increment.
pub fn l2_condition_partial(
    params: &JacobiParameters,
    x: f64,
    variance: impl Fn(usize) -> f64,
    n: usize,
    rel_tol: f64,
) -> Result<L2Partial> {
    if n == 0 {
        return Err(Error::CountTooSmall { min: 1, got: 0 });
    }
    let mut p = Stepper::first_kind(params, x);
    let mut q = Stepper::second_kind(params, x);
    let mut sums = Vec::with_capacity(2 * n);
    let mut acc = 0.0;
    for k in 1..=2 * n {
        let (p_prev, q_prev) = (p.value(), q.value());
        let (pk, qk) = (p.step()?, q.step()?);
        let bracket = pk.abs() + p_prev.abs() + qk.abs() + q_prev.abs();
        acc += variance(k) * bracket.powi(4);
        sums.push(acc);
    }
    let s_n = sums[n - 1];
    let s_2n = sums[2 * n - 1];
    let increment = s_2n - s_n;
    Ok(L2Partial { x, n, sums, s_n, s_2n, increment, bounded: increment <= rel_tol * s_n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::{eval_pq_real, Catalog};
    use alloc::vec;

    fn free() -> JacobiParameters {
        JacobiParameters::catalog(Catalog::Free)
    }

    fn random(seed: u64, dist: Distribution) -> RandomDiagonal {
        RandomDiagonal { amplitude: 0.2, exponent: 0.6, distribution: dist, seed, horizon: 64 }
    }

    #[test]
    fn apply_rank_one_and_diagonal() {
        let p = apply(&free(), &PerturbationSpec::RankOne { beta1: 1.0 }).unwrap();
        assert_eq!(p.b(1), 1.0);
        assert_eq!(p.b(2), 0.0);
        assert_eq!(p.a(1), 0.5);

        let p = apply(&free(), &PerturbationSpec::Diagonal { betas: vec![0.5, -0.25] }).unwrap();
        assert_eq!((p.b(1), p.b(2), p.b(3), p.b(100)), (0.5, -0.25, 0.0, 0.0));
    }

    #[test]
    fn random_streams_are_reproducible() {
        let spec = PerturbationSpec::RandomDiagonal(random(7, Distribution::Gaussian));
        let a = apply(&free(), &spec).unwrap();
        let b = apply(&free(), &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.horizon(), Some(64));
        let other = apply(&free(), &PerturbationSpec::RandomDiagonal(random(8, Distribution::Gaussian))).unwrap();
        assert_ne!(a, other);
        // Any entry regenerates alone.
        let r = random(7, Distribution::Gaussian);
        assert_eq!(r.beta(33), a.b(33));
    }

    #[test]
    fn random_beyond_horizon_is_an_error() {
        let spec = PerturbationSpec::RandomDiagonal(random(1, Distribution::Rademacher));
        let p = apply(&free(), &spec).unwrap();
        assert!(eval_pq_real(&p, 0.1, 65).is_ok());
        assert_eq!(eval_pq_real(&p, 0.1, 66).unwrap_err(), Error::BeyondHorizon { index: 65, horizon: 64 });
    }

    #[test]
    fn rademacher_magnitudes() {
        let r = random(3, Distribution::Rademacher);
        for k in 1..20 {
            let b = r.beta(k);
            assert!((b.abs() - 0.2 * (k as f64).powf(-0.6)).abs() < 1e-15);
            assert!((r.variance(k) - b * b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_diagonal_is_identity() {
        let base = JacobiParameters::new(vec![0.7, 0.4], vec![0.1], 0.5, 0.0).unwrap();
        let p = apply(&base, &PerturbationSpec::Diagonal { betas: vec![0.0; 5] }).unwrap();
        let (p0, q0) = eval_pq_real(&base, 0.33, 50).unwrap();
        let (p1, q1) = eval_pq_real(&p, 0.33, 50).unwrap();
        assert_eq!(p0, p1);
        assert_eq!(q0, q1);
    }

    #[test]
    fn rank_one_coefficients_are_constant() {
        let beta1 = 0.37;
        let tr = variation_of_parameters(&free(), &PerturbationSpec::RankOne { beta1 }, 0.21, 500).unwrap();
        for (u, v) in tr.u.iter().zip(&tr.v) {
            assert!((u[0] - 1.0).abs() < 1e-12 && (u[1] + beta1).abs() < 1e-12);
            assert!(v[0].abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12);
        }
        assert!(tr.converged_u && tr.converged_v);
        assert!(tr.max_residual < 1e-8);
    }

    #[test]
    fn summable_diagonal_converges() {
        let betas: Vec<f64> = (1..=10_000).map(|k| 0.5 / (k as f64 * k as f64)).collect();
        let spec = PerturbationSpec::Diagonal { betas };
        let tr = variation_of_parameters(&free(), &spec, 0.0, 10_000).unwrap();
        assert!(tr.converged_u, "u increment {}", tr.last_increment_u);
        assert!(tr.converged_v, "v increment {}", tr.last_increment_v);
        assert!(tr.max_residual < 1e-8);
    }

    #[test]
    fn varpar_requires_two_steps() {
        assert!(variation_of_parameters(&free(), &PerturbationSpec::RankOne { beta1: 1.0 }, 0.0, 1).is_err());
    }

    #[test]
    fn l2_first_term_and_zero_variance() {
        let l2 = l2_condition_partial(&free(), 0.0, |k| (k as f64).powf(-1.2), 3, 0.01).unwrap();
        assert_eq!(l2.sums[0], 81.0);
        let zero = l2_condition_partial(&free(), 0.0, |_| 0.0, 50, 0.01).unwrap();
        assert!(zero.sums.iter().all(|&s| s == 0.0));
        assert!(zero.bounded);
    }

    #[test]
    fn l2_increment_bounded_by_tail() {
        // At x = 0 the bracket is exactly 3, so the increment is 81 sum_{N<k<=2N} k^-1.2.
        let n = 10_000;
        let l2 = l2_condition_partial(&free(), 0.0, |k| (k as f64).powf(-1.2), n, 0.01).unwrap();
        let tail: f64 = (n + 1..=2 * n).map(|k| (k as f64).powf(-1.2)).sum();
        assert!((l2.increment - 81.0 * tail).abs() < 1e-9 * l2.s_2n);
        let full_tail: f64 = (n + 1..=200 * n).map(|k| (k as f64).powf(-1.2)).sum();
        assert!(l2.increment < 81.0 * full_tail);
    }
}
