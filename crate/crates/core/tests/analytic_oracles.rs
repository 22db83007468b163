//! Closed forms against adaptive quadrature from an independent crate.

use std::f64::consts::PI;

use proptest::prelude::*;
use quadrature::double_exponential::integrate;

use uavcov::analytic::{cond_cov_los, cond_cov_nlos, coverage_probability, log_laplace, los_laplace_arg, nlos_n0};
use uavcov::model::{ChannelParams, LinkClass, NetworkConfig};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn config(m_los: u32, alpha_los: f64, alpha_nlos: f64, density: f64, altitude: f64, radius: f64) -> NetworkConfig {
    let ch = ChannelParams::new(alpha_los, alpha_nlos, 10f64.powf(-4.11), 10f64.powf(-3.29), m_los).unwrap();
    NetworkConfig::new(density, altitude, radius, 10.0, 10f64.powf(-12.7), ch).unwrap()
}

/// `1 - (1+y)^{-M}` without cancellation at small `y`.
fn phi(y: f64, m: u32) -> f64 {
    -(-(m as f64) * y.ln_1p()).exp_m1()
}

/// `η(s)` by direct integration over squared link distance.
fn eta_oracle(s: f64, u: f64, cfg: &NetworkConfig) -> f64 {
    let ch = &cfg.channel;
    let h2 = cfg.altitude * cfg.altitude;
    let d = cfg.los_radius * cfg.los_radius + h2;
    let m = ch.m_los;
    let b_l = s * ch.mean_gain(LinkClass::Los) / m as f64;
    let los = integrate(|x| phi(b_l * x.powf(-0.5 * ch.alpha_los), m), u + h2, d, 1e-12).integral;
    let b_n = s * ch.mean_gain(LinkClass::Nlos);
    // x = D v^{-p}: the integrand vanishes linearly at v = 0.
    let p = 4.0 / (ch.alpha_nlos - 2.0);
    let nlos = integrate(
        |v| {
            if v == 0.0 {
                0.0
            } else {
                phi(b_n * (d * v.powf(-p)).powf(-0.5 * ch.alpha_nlos), 1) * p * d * v.powf(-p - 1.0)
            }
        },
        0.0,
        1.0,
        1e-12,
    )
    .integral;
    -PI * cfg.density * (los + nlos)
}

#[test]
fn n0_matches_integral_form() {
    for alpha in [2.2, 2.7, 3.0, 3.5, 4.0, 5.0] {
        let ch = ChannelParams::new(2.1, alpha, 1e-4, 1e-3, 2).unwrap();
        // N_0 = 1 + ∫₀¹ τ t^{a-2}/(1 + τ tᵃ) dt with a = α/2; t = w^p, p = 1/(a-1).
        let a = alpha / 2.0;
        let p = 1.0 / (a - 1.0);
        for tau in [0.01, 0.3, 1.0, 7.0, 100.0] {
            let oracle = 1.0 + integrate(|w| tau * p / (1.0 + tau * w.powf(p * a)), 0.0, 1.0, 1e-14).integral;
            let n0 = nlos_n0(tau, &ch).unwrap();
            assert!(rel(n0, oracle) < 1e-9, "alpha {alpha} tau {tau}: {n0} vs {oracle}");
        }
    }
}

#[test]
fn log_laplace_matches_direct_integral() {
    for (m, alpha_l, alpha_n) in [(1, 2.1, 4.0), (3, 2.1, 4.0), (5, 2.5, 3.3), (2, 3.0, 3.0)] {
        let cfg = config(m, alpha_l, alpha_n, 3e-6, 60.0, 250.0);
        for frac in [0.0, 0.2, 0.7] {
            let u = frac * 250.0 * 250.0;
            for tau in [0.1, 1.0, 10.0] {
                let s = los_laplace_arg(u, tau, &cfg);
                let closed = log_laplace(s, u, &cfg).unwrap();
                let oracle = eta_oracle(s, u, &cfg);
                assert!(rel(closed, oracle) < 1e-8, "m {m} u {u} tau {tau}: {closed} vs {oracle}");
            }
        }
    }
}

#[test]
fn rayleigh_conditional_coverage_is_laplace_transform() {
    let cfg = config(1, 2.3, 3.6, 5e-6, 40.0, 180.0);
    for frac in [0.05, 0.5, 0.95] {
        let u = frac * 180.0 * 180.0;
        for tau in [0.2, 2.0, 20.0] {
            let s = los_laplace_arg(u, tau, &cfg);
            let expected = eta_oracle(s, u, &cfg).exp();
            let got = cond_cov_los(u, tau, &cfg).unwrap();
            assert!(rel(got, expected) < 1e-8, "{got} vs {expected}");
        }
    }
}

#[test]
fn coverage_matches_adaptive_outer_integral() {
    for (m, density) in [(1, 1e-6), (3, 1e-6), (3, 2e-5), (6, 5e-6)] {
        let cfg = config(m, 2.1, 4.0, density, 50.0, 200.0);
        let r2 = 200.0 * 200.0;
        let pl = PI * density;
        for tau in [0.1, 1.0, 10.0] {
            let los =
                integrate(|u| pl * (-pl * u).exp() * cond_cov_los(u, tau, &cfg).unwrap(), 0.0, r2, 1e-12).integral;
            // u = R²/t on (0, 1].
            let nlos = integrate(
                |t| {
                    if t == 0.0 {
                        return 0.0;
                    }
                    let u = r2 / t;
                    pl * (-pl * u).exp() * cond_cov_nlos(u, tau, &cfg).unwrap() * r2 / (t * t)
                },
                0.0,
                1.0,
                1e-12,
            )
            .integral;
            let r = coverage_probability(tau, &cfg, 64).unwrap();
            assert!(rel(r.los_term, los) < 1e-8, "los {} vs {los}", r.los_term);
            assert!(rel(r.nlos_term, nlos) < 1e-8, "nlos {} vs {nlos}", r.nlos_term);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coverage_is_a_probability_and_decreasing(
        m in 1u32..7,
        alpha_l in 2.05f64..3.2,
        extra in 0.0f64..1.5,
        log_density in -7.0f64..-4.5,
        altitude in 10.0f64..200.0,
        radius in 50.0f64..500.0,
        tau in 0.05f64..50.0,
    ) {
        let alpha_n = (alpha_l + extra).max(2.6);
        let cfg = config(m, alpha_l, alpha_n, 10f64.powf(log_density), altitude, radius);
        let lo = coverage_probability(tau, &cfg, 48).unwrap().total;
        let hi = coverage_probability(1.5 * tau, &cfg, 48).unwrap().total;
        prop_assert!(lo > 0.0 && lo <= 1.0 + 1e-9, "p = {}", lo);
        prop_assert!(hi <= lo + 1e-9);
    }
}
