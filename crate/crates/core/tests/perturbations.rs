use cdklab_core::identity::sinc_identity_check;
use cdklab_core::jacobi::{Catalog, JacobiParameters};
use cdklab_core::kernel::{scaled_kernel_with_weight, standard_grid, ScaleMode};
use cdklab_core::perturbation::{
    apply, l2_condition_partial, variation_of_parameters, Distribution, PerturbationSpec, RandomDiagonal,
};
use cdklab_core::stieltjes::weights;
use num_complex::Complex64;
use proptest::prelude::*;

fn free() -> JacobiParameters {
    JacobiParameters::catalog(Catalog::Free)
}

fn draws(distribution: Distribution, seed: u64) -> RandomDiagonal {
    RandomDiagonal { amplitude: 1.0, exponent: 1e-9, distribution, seed, horizon: 20_000 }
}

#[test]
fn unit_draws_have_zero_mean_and_unit_variance() {
    for dist in [Distribution::Rademacher, Distribution::UniformSymmetric, Distribution::Gaussian] {
        let r = draws(dist, 17);
        let xs: Vec<f64> = (1..=20_000).map(|k| r.unit_draw(k)).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n;
        // Five standard errors.
        assert!(mean.abs() < 5.0 / n.sqrt(), "{dist}: mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "{dist}: variance {var}");
    }
}

#[test]
fn uniform_draws_stay_in_support() {
    let r = draws(Distribution::UniformSymmetric, 3);
    assert!((1..5000).all(|k| r.unit_draw(k).abs() <= 3f64.sqrt()));
}

#[test]
fn seeds_give_different_sequences() {
    let a = draws(Distribution::Gaussian, 1).betas();
    let b = draws(Distribution::Gaussian, 2).betas();
    assert_ne!(a[..100], b[..100]);
    assert_eq!(a, draws(Distribution::Gaussian, 1).betas());
}

#[test]
fn summable_perturbation_keeps_bulk_shape() {
    let betas: Vec<f64> = (1..=4096).map(|k| 0.5 / (k * k) as f64).collect();
    let spec = PerturbationSpec::Diagonal { betas };
    let perturbed = apply(&free(), &spec).unwrap();
    let w = weights(&perturbed, 0.0, None).unwrap().w;
    let sup = standard_grid()
        .into_iter()
        .map(|(a, b)| scaled_kernel_with_weight(&perturbed, 0.0, w, a, b, 4096, ScaleMode::ByDiag).unwrap().abs_err)
        .fold(0.0, f64::max);
    assert!(sup <= 0.05, "{sup}");
    for x in [0.0, 0.3] {
        let t = variation_of_parameters(&free(), &spec, x, 4096).unwrap();
        assert!(t.converged_u && t.converged_v);
    }
}

#[test]
fn l2_sums_grow_without_bound_on_slow_decay() {
    // With variance k^-1.2 and a bracket of exactly 3 at the origin the
    // doubling increment equals 81 * sum_{N<k<=2N} k^-1.2.
    let n = 10_000;
    let l2 = l2_condition_partial(&free(), 0.0, |k| 0.04 * (k as f64).powf(-1.2), n, 0.01).unwrap();
    let tail: f64 = (n + 1..=2 * n).map(|k| 0.04 * 81.0 * (k as f64).powf(-1.2)).sum();
    assert!((l2.increment - tail).abs() <= 1e-9 * tail);
    assert!(l2.s_2n > l2.s_n);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn identity_holds_for_random_tuples(
        rho in 0.05f64..1.0,
        ar in -1.0f64..1.0, ai in 0.2f64..1.5,
        br in -1.0f64..1.0, bi in -1.5f64..-0.2,
    ) {
        let (a, b) = (Complex64::new(ar, ai), Complex64::new(br, bi));
        let r = sinc_identity_check(rho, a, b, 1e-6).unwrap();
        prop_assert!(r.max_dev <= 1e-6, "{r:?}");
        let exact = (Complex64::new(1.0, 0.0) - (Complex64::i() * std::f64::consts::PI * rho * (a - b)).exp()) / (a - b);
        prop_assert!((r.lhs - exact).norm() <= 1e-6);
    }

    #[test]
    fn random_perturbation_shifts_only_the_diagonal(seed in 0u64..1000, k in 1usize..500) {
        let r = RandomDiagonal { amplitude: 0.2, exponent: 0.6, distribution: Distribution::Rademacher, seed, horizon: 500 };
        let p = apply(&free(), &PerturbationSpec::RandomDiagonal(r)).unwrap();
        prop_assert_eq!(p.a(k), 0.5);
        prop_assert_eq!(p.b(k), r.beta(k));
        prop_assert!((r.beta(k).abs() - 0.2 * (k as f64).powf(-0.6)).abs() < 1e-15);
    }
}
