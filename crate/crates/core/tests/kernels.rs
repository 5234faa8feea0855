use cdklab_core::jacobi::{Catalog, JacobiParameters, Stepper, TransferMatrix};
use cdklab_core::kernel::{
    cd_kernel, diagonal_kernel, second_kind_kernel, sine_target, standard_grid, transfer_average, universality_report,
    KernelMethod, PointMassVerdict,
};
use cdklab_core::stieltjes::weights;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Gauss nodes and weights for `mu` from the eigen-decomposition of the
/// truncated `m x m` Jacobi matrix.
fn gauss_rule(params: &JacobiParameters, m: usize) -> Vec<(f64, f64)> {
    let mut j = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        j[(i, i)] = params.b(i + 1);
        if i + 1 < m {
            j[(i, i + 1)] = params.a(i + 1);
            j[(i + 1, i)] = params.a(i + 1);
        }
    }
    let eig = SymmetricEigen::new(j);
    (0..m).map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2))).collect()
}

#[test]
fn kernel_reproduces_low_degree_polynomials() {
    let cheb = JacobiParameters::catalog(Catalog::Chebyshev1);
    let poly = |t: f64| 0.7 - 1.3 * t + 0.4 * t * t + 2.1 * t * t * t;
    for n in [4usize, 5, 9, 32] {
        let rule = gauss_rule(&cheb, n + 4);
        for x in [-0.9, -0.25, 0.0, 0.6, 0.95] {
            let integral: f64 = rule
                .iter()
                .map(|&(t, wt)| wt * cd_kernel(&cheb, c(x), c(t), n, KernelMethod::Sum).unwrap().re * poly(t))
                .sum();
            assert!((integral - poly(x)).abs() <= 1e-10, "n={n} x={x}: {integral} vs {}", poly(x));
        }
    }
}

#[test]
fn gauss_rule_recovers_arcsine_moments() {
    // Second moment of the arcsine law on [-1, 1] is 1/2, the fourth is 3/8.
    let rule = gauss_rule(&JacobiParameters::catalog(Catalog::Chebyshev1), 6);
    let m2: f64 = rule.iter().map(|(t, w)| w * t * t).sum();
    let m4: f64 = rule.iter().map(|(t, w)| w * t.powi(4)).sum();
    assert!((m2 - 0.5).abs() < 1e-13 && (m4 - 0.375).abs() < 1e-13);
}

#[test]
fn scaled_kernel_error_decreases_along_doubling_ladder() {
    let ladder = [256usize, 512, 1024, 2048, 4096];
    for (which, x0) in
        [(Catalog::Chebyshev1, 0.0), (Catalog::Free, 0.0), (Catalog::Chebyshev1, 0.3), (Catalog::Free, -0.4)]
    {
        let params = JacobiParameters::catalog(which);
        let report = universality_report(&params, x0, &ladder, &standard_grid()).unwrap();
        let errs: Vec<f64> = report.sup_err.iter().map(|e| e.unwrap()).collect();
        let violations = errs.windows(2).filter(|w| w[1] > w[0]).count();
        assert!(violations <= 1, "{which:?} at {x0}: {errs:?}");
        assert!(report.diag_trace.windows(2).all(|w| w[0] <= w[1]));
        assert!(report.rho_hat.iter().all(|r| r.unwrap() > 0.0));
        assert_eq!(report.point_mass_verdict, PointMassVerdict::Diverges);
    }
}

#[test]
fn second_kind_error_tracks_first_kind() {
    let cheb = JacobiParameters::catalog(Catalog::Chebyshev1);
    let wb = weights(&cheb, 0.0, None).unwrap();
    let w_tilde = wb.w_tilde.unwrap();
    for n in [1024usize, 4096] {
        let first = universality_report(&cheb, 0.0, &[n], &standard_grid()).unwrap().sup_err[0].unwrap();
        let mut second: f64 = 0.0;
        for (a, b) in standard_grid() {
            let s = second_kind_kernel(&cheb, 0.0, a, b, n).unwrap();
            // Same-rho target: rho_hat from the first-kind kernel, w~ in the denominator.
            let rho = first_kind_rho(&cheb, n, wb.w);
            let target = sine_target(rho, w_tilde, a, b);
            second = second.max((s.value - target).norm());
        }
        assert!(second <= 2.0 * first, "n={n}: second {second} first {first}");
    }
}

fn first_kind_rho(params: &JacobiParameters, n: usize, w: f64) -> f64 {
    diagonal_kernel(params, 0.0, n).unwrap() * w / n as f64
}

fn operator_average(params: &JacobiParameters, z: Complex64, n: usize) -> f64 {
    let mut p = Stepper::first_kind(params, z);
    let mut q = Stepper::second_kind(params, z);
    let mut sum = 1.0;
    for _ in 1..n {
        p.step().unwrap();
        q.step().unwrap();
        let m = TransferMatrix([[p.value(), -q.value()], [p.lagged(), -q.lagged()]]);
        sum += m.operator_norm().powi(2);
    }
    sum / n as f64
}

#[test]
fn transfer_average_obeys_exponential_comparison() {
    let free = JacobiParameters::catalog(Catalog::Free);
    let alpha_inv = 1.0 / free.alpha_minus();
    let n = 4096;
    let offsets = [c(0.0), c(1.0), Complex64::new(0.0, 1.0), Complex64::new(1.0, 1.0)];
    for &a in &offsets {
        let za = a / n as f64;
        let avg_a = operator_average(&free, za, n);
        let frob = transfer_average(&free, 0.0, a, n).unwrap();
        assert!(avg_a <= frob + 1e-12 && frob <= 2.0 * avg_a + 1e-12);
        for &b in &offsets {
            let avg_b = operator_average(&free, b / n as f64, n);
            let bound = avg_a * (2.0 * avg_a * alpha_inv * (a - b).norm()).exp();
            assert!(avg_b <= bound * (1.0 + 1e-12), "a={a} b={b}: {avg_b} > {bound}");
        }
    }
}
