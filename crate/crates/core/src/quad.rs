//! Globally adaptive 7/15-point Gauss-Kronrod quadrature for complex integrands.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    /// Sum of per-panel `|Kronrod - Gauss|` estimates.
    pub error: f64,
    pub evaluations: usize,
    pub panels: usize,
}

struct Panel {
    lo: f64,
    hi: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> Complex64>(f: &mut F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let sum = f(center - dx) + f(center + dx);
        kron += sum * WGK[i];
        if i % 2 == 1 {
            gauss += sum * WG[i / 2];
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).norm();
    Panel { lo, hi, value, error }
}

/// Integrates `f` over `[lo, hi]`, starting from `panels` equal pieces and
/// bisecting the worst panel until the summed error estimate is below `tol`.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    lo: f64,
    hi: f64,
    panels: usize,
    tol: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument("integration interval must be finite and nonempty"));
    }
    let panels = panels.max(1);
    let width = (hi - lo) / panels as f64;
    let mut heap = BinaryHeap::with_capacity(panels * 2);
    for i in 0..panels {
        let a = lo + width * i as f64;
        let b = if i + 1 == panels { hi } else { a + width };
        heap.push(kronrod(&mut f, a, b));
    }
    let mut evaluations = 15 * panels;
    let mut running: f64 = heap.iter().map(|p| p.error).sum();
    loop {
        if running <= tol || heap.len() >= max_panels {
            // Re-sum to shed drift from the incremental updates.
            let error: f64 = heap.iter().map(|p| p.error).sum();
            if error <= tol || heap.len() >= max_panels {
                let value = heap.iter().map(|p| p.value).sum();
                if error > tol {
                    return Err(Error::QuadratureNotConverged { achieved: error, requested: tol });
                }
                return Ok(QuadResult { value, error, evaluations, panels: heap.len() });
            }
            running = error;
        }
        let worst = heap.pop().expect("heap is never empty");
        running -= worst.error;
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Too narrow to split; freeze its estimate.
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        let left = kronrod(&mut f, worst.lo, mid);
        let right = kronrod(&mut f, mid, worst.hi);
        running += left.error + right.error;
        heap.push(left);
        heap.push(right);
        evaluations += 30;
    }
}

/// Integrates over the whole real line via `s = t / (1 - t^2)`.
///
/// Intended for smooth integrands decaying at least like `|s|^-2`.
pub fn integrate_line<F: FnMut(f64) -> Complex64>(mut f: F, tol: f64, max_panels: usize) -> Result<QuadResult> {
    let g = |t: f64| {
        let d = 1.0 - t * t;
        let s = t / d;
        f(s) * ((1.0 + t * t) / (d * d))
    };
    integrate(g, -1.0, 1.0, 8, tol, max_panels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| Complex64::new(x.powi(5) - 3.0 * x * x, x), 0.0, 2.0, 1, 1e-12, 100).unwrap();
        assert!((r.value - Complex64::new(64.0 / 6.0 - 8.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let r = integrate(|x| Complex64::new(x.cos(), 0.0) / (1.0 + 400.0 * x * x), -PI, PI, 4, 1e-11, 10_000).unwrap();
        // int_{-inf}^{inf} cos x / (1 + 400 x^2) = (pi/20) e^{-1/20}; the tail beyond pi is < 1/(400 pi) * 2.
        let whole = PI / 20.0 * (-1.0f64 / 20.0).exp();
        assert!((r.value.re - whole).abs() < 2.0 / (400.0 * PI));
    }

    #[test]
    fn lorentzian_on_line() {
        let r = integrate_line(|s| Complex64::new(1.0 / (1.0 + s * s), 0.0), 1e-10, 10_000).unwrap();
        assert!((r.value.re - PI).abs() < 1e-9);
    }

    #[test]
    fn reports_nonconvergence() {
        let err =
            integrate(|x| Complex64::new(1.0 / x.abs().sqrt().max(1e-300), 0.0), -1.0, 1.0, 1, 1e-14, 20).unwrap_err();
        assert!(matches!(err, Error::QuadratureNotConverged { .. }));
    }
}
