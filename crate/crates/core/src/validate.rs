//! Self-consistency gates shared by the test suite and the `validate`
//! subcommand.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::analytic::{los_laplace_arg, toeplitz_coeffs, CoverageKernel, LaplaceQuadrature};
use crate::error::Result;
use crate::model::{ChannelParams, NetworkConfig};
use crate::optimize::{integrand_identity_sides, lambda_lower_bound, lambda_star_grid, DensityGrid};
use crate::sim::{estimates_from_outcomes, simulate_trials, LosModel, Metric, SimWindow};

/// Step of the `n`-th difference relative to `s`.
pub const FD_STEP: f64 = 0.04;
/// Richardson levels applied to the differences.
pub const FD_LEVELS: usize = 3;

/// `n`-th central difference of `f` at `x` with spacing `h`.
pub fn central_difference<F: Fn(f64) -> Result<f64>>(f: &F, x: f64, n: usize, h: f64) -> Result<f64> {
    let mut binom = 1.0;
    let mut acc = 0.0;
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * f(x + (0.5 * n as f64 - k as f64) * h)?;
        binom *= (n - k) as f64 / (k + 1) as f64;
    }
    Ok(acc / h.powi(n as i32))
}

/// Richardson extrapolation in `h²` of a difference quotient evaluated at
/// `h, h/2, …, h/2^levels`.
pub fn richardson<D: Fn(f64) -> Result<f64>>(diff: D, h: f64, levels: usize) -> Result<f64> {
    let mut row: Vec<f64> = Vec::with_capacity(levels + 1);
    for k in 0..=levels {
        let mut next = vec![diff(h / f64::from(1u32 << k))?];
        for j in 1..=k {
            let factor = 4f64.powi(j as i32);
            next.push(next[j - 1] + (next[j - 1] - row[j - 1]) / (factor - 1.0));
        }
        row = next;
    }
    Ok(row[levels])
}

/// Deliberate corruption used to check that the gates can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flip the sign of `c_1` before comparison.
    C1Sign,
}

impl FdCheck {
    pub fn with_fault(mut self, fault: Option<Fault>) -> Self {
        if fault == Some(Fault::C1Sign) && self.n == 1 {
            self.closed_form = -self.closed_form;
            self.rel_error = ((self.finite_difference - self.closed_form) / self.closed_form).abs();
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdCheck {
    pub n: usize,
    pub closed_form: f64,
    pub finite_difference: f64,
    pub rel_error: f64,
}

/// Toeplitz entries against differences of the quadrature log-Laplace.
pub fn fd_gate(u: f64, tau: f64, cfg: &NetworkConfig, n_max: usize) -> Result<Vec<FdCheck>> {
    fd_gate_with_step(u, tau, cfg, n_max, FD_STEP, FD_LEVELS)
}

/// As [`fd_gate`], with the `n`-th difference spaced `step·n·s`.
pub fn fd_gate_with_step(
    u: f64,
    tau: f64,
    cfg: &NetworkConfig,
    n_max: usize,
    step: f64,
    levels: usize,
) -> Result<Vec<FdCheck>> {
    let coeffs = toeplitz_coeffs(u, tau, cfg)?;
    let s = los_laplace_arg(u, tau, cfg);
    let eta = LaplaceQuadrature::new(u, cfg)?;
    let h2 = cfg.altitude * cfg.altitude;
    let top = n_max.min(coeffs.len() - 1);
    let mut factorial = 1.0;
    (0..=top)
        .map(|n| {
            let fd = if n == 0 {
                eta.eval(s) - (u + h2)
            } else {
                factorial *= n as f64;
                let d = richardson(|h| Ok(eta.central_difference(s, n, h)), step * s * n as f64, levels)?;
                (-s).powi(n as i32) / factorial * d
            };
            let closed = coeffs.entries[n];
            Ok(FdCheck { n, closed_form: closed, finite_difference: fd, rel_error: ((fd - closed) / closed).abs() })
        })
        .collect()
}

/// Randomized network drawn from a broad but physical parameter box.
pub fn random_config<R: Rng + ?Sized>(rng: &mut R, m_range: std::ops::RangeInclusive<u32>) -> Result<NetworkConfig> {
    let alpha_los: f64 = rng.random_range(2.05..3.2);
    let alpha_nlos = rng.random_range(alpha_los.max(2.6)..4.6);
    let a_los = 10f64.powf(rng.random_range(-4.5..-3.5));
    let a_nlos = 10f64.powf(rng.random_range(-4.0..-3.0));
    let m = rng.random_range(m_range);
    let ch = ChannelParams::new(alpha_los, alpha_nlos, a_los, a_nlos, m)?;
    let altitude = rng.random_range(10.0..200.0);
    let radius = rng.random_range(50.0..500.0);
    let density = 10f64.powf(rng.random_range(-7.0..-4.0));
    NetworkConfig::new(density, altitude, radius, 10.0, 10f64.powf(-12.7), ch)
}

/// Relative gap of the integrand factorization.
pub fn identity_gate(u: f64, lambda: f64, tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    let (lhs, rhs) = integrand_identity_sides(u, lambda, tau, cfg)?;
    Ok((lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McComparison {
    pub tau: f64,
    pub analytic: f64,
    pub sir: f64,
    pub sinr: f64,
    pub stderr: f64,
    /// `|analytic - sir| ≤ max(0.01, 3·stderr)`.
    pub agrees: bool,
}

pub fn mc_gate(taus: &[f64], cfg: &NetworkConfig, trials: usize, seed: u64, order: usize) -> Result<Vec<McComparison>> {
    let model = LosModel::for_config(cfg);
    let outcomes = simulate_trials(cfg, &model, SimWindow::default_for(cfg), trials, seed)?;
    let sir = estimates_from_outcomes(&outcomes, taus, Metric::Sir, seed);
    let sinr = estimates_from_outcomes(&outcomes, taus, Metric::Sinr, seed);
    taus.iter()
        .zip(sir.iter().zip(&sinr))
        .map(|(&tau, (e, f))| {
            let analytic = CoverageKernel::new(tau, cfg, order)?.evaluate(cfg.density).total;
            let agrees = (analytic - e.coverage).abs() <= 0.01f64.max(3.0 * e.stderr);
            Ok(McComparison { tau, analytic, sir: e.coverage, sinr: f.coverage, stderr: e.stderr, agrees })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub tau: f64,
    pub lambda_lb: f64,
    pub lambda_star: f64,
    pub coverage_at_lb: f64,
    pub coverage_at_star: f64,
    pub holds: bool,
}

impl BoundCheck {
    pub fn ratio(&self) -> f64 {
        self.lambda_lb / self.lambda_star
    }

    pub fn coverage_gap(&self) -> f64 {
        self.coverage_at_star - self.coverage_at_lb
    }
}

pub fn bound_gate(tau: f64, cfg: &NetworkConfig, grid: &DensityGrid, order: usize) -> Result<BoundCheck> {
    let lb = lambda_lower_bound(tau, cfg, order)?;
    let star = lambda_star_grid(tau, cfg, grid, order)?;
    let kernel = CoverageKernel::new(tau, cfg, order)?;
    Ok(BoundCheck {
        tau,
        lambda_lb: lb.lambda_lb,
        lambda_star: star.lambda_star,
        coverage_at_lb: kernel.evaluate(lb.lambda_lb).total,
        coverage_at_star: star.coverage,
        holds: lb.lambda_lb <= star.lambda_star,
    })
}

/// Grid used for the density optimum: `[1e-8, 1e-4]` m⁻², 60 log points.
pub fn default_density_grid() -> DensityGrid {
    DensityGrid::log_spaced(1e-8, 1e-4, 60)
}

/// Uniform draw of `u` strictly inside `(0, R²)`.
pub fn random_u<R: Rng + ?Sized>(rng: &mut R, cfg: &NetworkConfig) -> f64 {
    let r2 = cfg.los_radius * cfg.los_radius;
    r2 * rng.random_range(0.02..0.98)
}

/// Density-normalized check that `πλ` factors out of every entry.
pub fn density_free(u: f64, tau: f64, cfg: &NetworkConfig) -> Result<bool> {
    let a = toeplitz_coeffs(u, tau, cfg)?;
    let b = toeplitz_coeffs(u, tau, &cfg.with_density(cfg.density * PI))?;
    Ok(a == b)
}
