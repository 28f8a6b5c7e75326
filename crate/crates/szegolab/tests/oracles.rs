//! Closed-form cross-checks of the reference quadratures and of the kernel
//! normalization: round volumes, monomial moments, the binomial form of the
//! reproducing constant, and the projector identity itself.
//!
//! The sphere quadrature in the shared fixtures is validated here against
//! independent closed forms before any suite leans on it as an oracle.

mod common;

use std::f64::consts::PI;
use szegolab::states::SzegoKernel;
use szegolab::C64;

fn factorial(m: usize) -> f64 {
    (1..=m).map(|j| j as f64).product()
}

#[test]
fn round_volumes_match_the_closed_forms() {
    // vol(S^{2n+1}) = 2π^{n+1}/n! for the round measure.
    let vol1 = common::sphere_integral(1, 6, 4, &mut |_| C64::new(1.0, 0.0));
    assert!(
        (vol1.re - 2.0 * PI * PI).abs() < 1e-10 * vol1.re,
        "n = 1 volume came out as {vol1}"
    );
    assert!(vol1.im.abs() < 1e-12);
    let vol2 = common::sphere_integral(2, 6, 4, &mut |_| C64::new(1.0, 0.0));
    assert!(
        (vol2.re - PI.powi(3)).abs() < 1e-10 * vol2.re,
        "n = 2 volume came out as {vol2}"
    );
    assert!(vol2.im.abs() < 1e-12);
}

#[test]
fn monomial_moments_match_the_dirichlet_closed_form() {
    // ∫ |y^α|² dσ = vol(S^{2n+1}) · α! n! / (|α| + n)!
    let cases: &[(usize, &[usize])] = &[
        (1, &[0, 0]),
        (1, &[1, 0]),
        (1, &[2, 1]),
        (1, &[0, 3]),
        (2, &[0, 0, 0]),
        (2, &[1, 1, 0]),
        (2, &[2, 0, 1]),
    ];
    for &(n, alpha) in cases {
        let total: usize = alpha.iter().sum();
        let got = common::sphere_integral(n, total + 3, 4, &mut |y| {
            let mut m = 1.0;
            for (j, &a) in alpha.iter().enumerate() {
                m *= y[j].norm_sqr().powi(a as i32);
            }
            C64::new(m, 0.0)
        });
        let volume = 2.0 * PI.powi(n as i32 + 1) / factorial(n);
        let mut want = volume * factorial(n) / factorial(total + n);
        for &a in alpha {
            want *= factorial(a);
        }
        assert!(
            (got.re - want).abs() < 1e-10 * want,
            "n = {n}, α = {alpha:?}: quadrature {} vs closed form {want}",
            got.re
        );
        assert!(got.im.abs() < 1e-12, "n = {n}, α = {alpha:?}");
    }
}

#[test]
fn kernel_constants_match_the_binomial_closed_form() {
    // c_{k,n} = C(k+n, n) · n!/πⁿ; the library computes the n ≥ 2 branch by
    // an exact Beta-marginal quadrature, so agreement is machine precision.
    let kernel1 = SzegoKernel::new(1);
    let kernel2 = SzegoKernel::new(2);
    for k in 0..=12usize {
        let want1 = (k + 1) as f64 / PI;
        assert!(
            (kernel1.constant(k) - want1).abs() < 1e-12 * want1,
            "n = 1, k = {k}: {} vs {want1}",
            kernel1.constant(k)
        );
        let want2 = ((k + 1) * (k + 2)) as f64 / (PI * PI);
        assert!(
            (kernel2.constant(k) - want2).abs() < 1e-11 * want2,
            "n = 2, k = {k}: {} vs {want2}",
            kernel2.constant(k)
        );
    }
}

#[test]
fn kernel_reproduces_itself_under_the_bundle_volume() {
    for n in 1..=2usize {
        for k in 1..=10usize {
            let seed = (100 * n + k) as u64;
            if let Err(msg) = common::reproducing_case(n, k, seed) {
                panic!("{msg}");
            }
        }
    }
}
