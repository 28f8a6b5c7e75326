//! Acceptance gate: end-to-end checks pinning the laboratory's headline
//! behaviors, one printed pass/fail line per criterion.
//!
//! 1. Peak growth of the knot state at an equatorial point follows the
//!    central binomial law and its √k asymptote.
//! 2. Off the reach of the knot the state decays faster than any power.
//! 3. Equivariant state moduli follow the return-element phase sum.
//! 4. The leading-term predictor reproduces the measured equivariant
//!    asymptote, with the density, potential, and stabilizer pinned.
//! 5. Transverse displacements at scale 1/√k shape a Gaussian profile;
//!    tangent displacements leave the modulus flat.
//! 6. The pairing of two transverse knots stays bounded with the predicted
//!    modulus on the aligned subsequence.
//! 7. The randomized invariant suites hold at full case counts.

mod common;

use rand::Rng;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use szegolab::asymptotics::{
    fit_power_law, predict_pairing_transverse, predict_theorem_main, rapid_decay_test,
};
use szegolab::geometry::{
    effective_potential, heisenberg_chart, horizontal_part, orbit_chart_frame, BundlePoint,
    TorusAction,
};
use szegolab::legendrian::{builtin_knot, find_return_elements};
use szegolab::states::{compute_u_k, compute_u_k_varpi, hermitian_product};
use szegolab::symplectic::{compute_rt, xi_lambda};
use szegolab::{C64, CVector, RVector, I};

fn report(label: &str, outcome: Result<(), String>) {
    match outcome {
        Ok(()) => println!("{label}: PASS"),
        Err(message) => {
            println!("{label}: FAIL ({message})");
            panic!("{label}: {message}");
        }
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn equatorial_point() -> Result<BundlePoint, String> {
    BundlePoint::new(CVector::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
    ]))
    .map_err(err)
}

#[test]
fn criterion_1_equatorial_peak_growth() {
    let outcome = (|| -> Result<(), String> {
        let knot = builtin_knot(0.0);
        let x = equatorial_point()?;
        for k in (50..=400usize).step_by(2) {
            let measured = compute_u_k(&knot, k, &x).map_err(err)?.norm();
            let closed = common::knot_peak_value(k);
            let rel = (measured - closed).abs() / closed;
            if rel > 1e-9 {
                return Err(format!(
                    "k = {k}: measured {measured:.12e} vs closed form {closed:.12e} (rel {rel:.3e})"
                ));
            }
        }
        let measured = compute_u_k(&knot, 400, &x).map_err(err)?.norm();
        let asymptote = 2.0 * (2.0 * 400.0 / PI).sqrt();
        let ratio = measured / asymptote;
        if (ratio - 1.0).abs() > 0.01 {
            return Err(format!("k = 400: ratio to 2√(2k/π) is {ratio:.5}"));
        }
        Ok(())
    })();
    report("criterion 1 (equatorial peak growth)", outcome);
}

#[test]
fn criterion_2_rapid_decay_off_the_reach() {
    let outcome = (|| -> Result<(), String> {
        let knot = builtin_knot(0.0);
        let x = BundlePoint::new(CVector::from_vec(vec![
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::new(0.0, FRAC_1_SQRT_2),
        ]))
        .map_err(err)?;
        let mut entries: Vec<(usize, C64)> = Vec::new();
        for k in 1..=200usize {
            let value = compute_u_k(&knot, k, &x).map_err(err)?;
            let bound = (k + 1) as f64 * 2f64.powf(2.0 - k as f64 / 2.0);
            if value.norm() > bound {
                return Err(format!(
                    "k = {k}: |u_k| = {:.3e} exceeds the bound {bound:.3e}",
                    value.norm()
                ));
            }
            entries.push((k, value));
        }
        if !rapid_decay_test(&entries, 5).map_err(err)? {
            return Err("the decay test rejected the off-reach sequence".into());
        }
        Ok(())
    })();
    report("criterion 2 (rapid decay off the reach)", outcome);
}

#[test]
fn criterion_3_equivariant_asymptote_from_return_data() {
    let outcome = (|| -> Result<(), String> {
        let knot = builtin_knot(0.0);
        let action = TorusAction::new(2, vec![vec![1, -1]], RVector::zeros(1)).map_err(err)?;
        let x = knot.point(&[PI / 4.0]).map_err(err)?;
        let elements = find_return_elements(&x, &knot, Some(&action)).map_err(err)?;
        if elements.len() != 8 {
            return Err(format!(
                "expected 8 return elements at the balanced point, found {}",
                elements.len()
            ));
        }
        for varpi in [-2i64, -1, 0, 1, 2] {
            for k in (100..=300usize).step_by(10) {
                let phase_sum: C64 = elements
                    .iter()
                    .map(|el| (I * (varpi as f64 * el.g_params[0] - k as f64 * el.h)).exp())
                    .sum();
                let predicted = phase_sum.norm() / (SQRT_2 * PI);
                let measured = compute_u_k_varpi(&knot, &action, &[varpi], k, &x)
                    .map_err(err)?
                    .norm();
                if predicted > 1e-6 {
                    let rel = (measured - predicted).abs() / predicted;
                    if rel > 0.05 {
                        return Err(format!(
                            "ϖ = {varpi}, k = {k}: measured {measured:.6e} vs phase sum {predicted:.6e} (rel {rel:.4})"
                        ));
                    }
                } else if measured > 1e-8 {
                    return Err(format!(
                        "ϖ = {varpi}, k = {k}: dead level leaked {measured:.3e}"
                    ));
                }
            }
        }
        Ok(())
    })();
    report("criterion 3 (equivariant asymptote from return data)", outcome);
}

#[test]
fn criterion_4_leading_term_predictor_on_the_equivariant_config() {
    let outcome = (|| -> Result<(), String> {
        let knot = builtin_knot(0.0);
        let action = TorusAction::new(2, vec![vec![1, -1]], RVector::zeros(1)).map_err(err)?;
        let x = knot.point(&[PI / 4.0]).map_err(err)?;

        // Pin the geometric ingredients: V_eff = π, |G_m| = 2, Ξ_Λ = 1/π.
        let orbit = effective_potential(&action, &x).map_err(err)?;
        if (orbit.v_eff - PI).abs() > 1e-9 {
            return Err(format!("V_eff = {:.12} instead of π", orbit.v_eff));
        }
        if orbit.stabilizer_order != 2 {
            return Err(format!("|G_m| = {} instead of 2", orbit.stabilizer_order));
        }
        let tangent = horizontal_part(&x, &knot.tangent_frame(&[PI / 4.0])[0]);
        let chart = heisenberg_chart(&x, &[tangent]).map_err(err)?;
        let dirs = orbit_chart_frame(&action, &chart).map_err(err)?;
        let rt = compute_rt(&dirs).map_err(err)?;
        let xi = xi_lambda(&rt, orbit.v_eff).map_err(err)?;
        if (xi - C64::new(1.0 / PI, 0.0)).norm() > 1e-9 {
            return Err(format!("Ξ_Λ = {xi} instead of 1/π"));
        }

        let term_modulus = 1.0 / (SQRT_2 * PI);
        for varpi in [-2i64, -1, 0, 1, 2] {
            let pred =
                predict_theorem_main(&x, &knot, &action, &[varpi], &CVector::zeros(1)).map_err(err)?;
            if pred.exponent().abs() > 1e-12 {
                return Err(format!("ϖ = {varpi}: exponent {} instead of 0", pred.exponent()));
            }
            if pred.terms().len() != 8 {
                return Err(format!("ϖ = {varpi}: {} terms instead of 8", pred.terms().len()));
            }
            for term in pred.terms() {
                if (term.coefficient.norm() - term_modulus).abs() > 1e-9 {
                    return Err(format!(
                        "ϖ = {varpi}: term modulus {:.12} instead of 1/(√2 π)",
                        term.coefficient.norm()
                    ));
                }
            }
            // One live level per surviving isotype; odd isotypes stay dead at
            // every level of the sweep.
            let live_k = match varpi.rem_euclid(4) {
                0 => Some(300usize),
                2 => Some(290usize),
                _ => None,
            };
            match live_k {
                Some(k) => {
                    let want = pred.eval(k).norm();
                    let got = compute_u_k_varpi(&knot, &action, &[varpi], k, &x)
                        .map_err(err)?
                        .norm();
                    let rel = (got - want).abs() / want;
                    if rel > 0.05 {
                        return Err(format!(
                            "ϖ = {varpi}, k = {k}: measured {got:.6e} vs predicted {want:.6e} (rel {rel:.4})"
                        ));
                    }
                }
                None => {
                    let k = 297usize;
                    let want = pred.eval(k).norm();
                    let got = compute_u_k_varpi(&knot, &action, &[varpi], k, &x)
                        .map_err(err)?
                        .norm();
                    if want > 1e-8 || got > 1e-8 {
                        return Err(format!(
                            "ϖ = {varpi}: dead isotype carries weight (predicted {want:.3e}, measured {got:.3e})"
                        ));
                    }
                }
            }
        }
        Ok(())
    })();
    report(
        "criterion 4 (leading-term predictor on the equivariant config)",
        outcome,
    );
}

#[test]
fn criterion_5_gaussian_transverse_profile() {
    let outcome = (|| -> Result<(), String> {
        let knot = builtin_knot(0.0);
        let x = equatorial_point()?;
        let k = 400usize;
        let peak = compute_u_k(&knot, k, &x).map_err(err)?.norm();
        let chart = heisenberg_chart(&x, &[]).map_err(err)?;
        let tangent = knot.tangent_frame(&[0.0])[0].clone();
        let normal = &tangent * I;
        let w_tangent = chart.horizontal_coords(&tangent).map_err(err)?;
        let w_normal = chart.horizontal_coords(&normal).map_err(err)?;
        for step in 1..=6usize {
            let rho = 0.25 * step as f64;
            let probe = chart.displace(&(&w_normal * rho), k).map_err(err)?;
            let ratio = compute_u_k(&knot, k, &probe).map_err(err)?.norm() / peak;
            let gaussian = (-rho * rho).exp();
            if (ratio / gaussian - 1.0).abs() > 0.03 {
                return Err(format!(
                    "‖w‖ = {rho}: normal ratio {ratio:.6} vs e^(−‖w‖²) = {gaussian:.6}"
                ));
            }
            let probe_t = chart.displace(&(&w_tangent * rho), k).map_err(err)?;
            let ratio_t = compute_u_k(&knot, k, &probe_t).map_err(err)?.norm() / peak;
            if (ratio_t - 1.0).abs() > 0.03 {
                return Err(format!("‖w‖ = {rho}: tangent ratio drifted to {ratio_t:.6}"));
            }
        }
        Ok(())
    })();
    report("criterion 5 (Gaussian transverse profile)", outcome);
}

#[test]
fn criterion_6_transverse_pairing_stays_bounded() {
    let outcome = (|| -> Result<(), String> {
        let lam = builtin_knot(0.0);
        let sig = builtin_knot(PI / 2.0);
        let levels = [100usize, 128, 156, 184, 212, 240, 268, 296, 300];
        let mut entries: Vec<(usize, C64)> = Vec::new();
        for &k in &levels {
            entries.push((k, hermitian_product(&lam, &sig, k, None).map_err(err)?));
        }
        let fit = fit_power_law(&entries, None).map_err(err)?;
        if fit.exponent.abs() >= 0.1 {
            return Err(format!(
                "fitted exponent {:.4} on the aligned subsequence",
                fit.exponent
            ));
        }
        let pred = predict_pairing_transverse(&lam, &sig, None).map_err(err)?;
        let want = pred.eval(300).norm();
        if (want - 8.0 * SQRT_2).abs() > 1e-9 {
            return Err(format!("predicted modulus {want:.12} instead of 8√2"));
        }
        let got = entries.last().unwrap().1.norm();
        let rel = (got - want).abs() / want;
        if rel > 0.10 {
            return Err(format!(
                "k = 300: measured {got:.6} vs predicted {want:.6} (rel {rel:.4})"
            ));
        }
        Ok(())
    })();
    report("criterion 6 (transverse pairing stays bounded)", outcome);
}

fn random_orbit_dims(seed: u64) -> (usize, usize) {
    let mut r = common::rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = r.gen_range(1..=4usize);
    let g = r.gen_range(1..=n);
    (n, g)
}

fn random_profile_dims(seed: u64) -> (usize, usize) {
    let mut r = common::rng(seed ^ 0x6a09_e667_f3bc_c909);
    let n = r.gen_range(1..=4usize);
    let g = r.gen_range(0..=n);
    (n, g)
}

#[test]
fn criterion_7_randomized_property_suites() {
    let outcome = (|| -> Result<(), String> {
        for i in 0..500u64 {
            let seed = 30_000 + i;
            let (n, g) = random_orbit_dims(seed);
            common::tangent_roundtrip_case(n, g, seed)
                .map_err(|e| format!("tangent round trip, seed {seed}: {e}"))?;
        }
        for i in 0..500u64 {
            let seed = 31_000 + i;
            let (n, g) = random_orbit_dims(seed);
            common::rt_constraint_case(n, g, seed)
                .map_err(|e| format!("orbit data constraints, seed {seed}: {e}"))?;
        }
        for i in 0..500u64 {
            let seed = 32_000 + i;
            let (n, g) = random_profile_dims(seed);
            common::gaussian_profile_case(n, g, seed)
                .map_err(|e| format!("width form, seed {seed}: {e}"))?;
        }
        let mut counted = 0usize;
        for i in 0..50u64 {
            let seed = 33_000 + i;
            if common::orbit_identity_case(seed)
                .map_err(|e| format!("scaling identity, seed {seed}: {e}"))?
            {
                counted += 1;
            }
        }
        if counted < 25 {
            return Err(format!("only {counted} of 50 torus draws were non-degenerate"));
        }
        for i in 0..500u64 {
            let seed = 34_000 + i;
            common::gaussian_oracle_case(seed)
                .map_err(|e| format!("Gaussian closed form, seed {seed}: {e}"))?;
        }
        for i in 0..500u64 {
            let seed = 35_000 + i;
            common::iota_case(seed).map_err(|e| format!("ι_J laws, seed {seed}: {e}"))?;
        }
        for i in 0..500u64 {
            let seed = 36_000 + i;
            common::chart_remainder_case(seed)
                .map_err(|e| format!("chart remainder, seed {seed}: {e}"))?;
        }
        for i in 0..16u64 {
            let seed = 37_000 + i;
            common::oracle_slope_case(1, seed)
                .map_err(|e| format!("oracle error slope (1-d), seed {seed}: {e}"))?;
        }
        for i in 0..4u64 {
            let seed = 38_000 + i;
            common::oracle_slope_case(2, seed)
                .map_err(|e| format!("oracle error slope (2-d), seed {seed}: {e}"))?;
        }
        for n in 1..=2usize {
            for k in 1..=10usize {
                let seed = (39_000 + 100 * n + k) as u64;
                common::reproducing_case(n, k, seed)
                    .map_err(|e| format!("reproducing identity: {e}"))?;
            }
        }
        Ok(())
    })();
    report("criterion 7 (randomized property suites)", outcome);
}
