//! Coverage-maximizing GBS density.
//!
//! The LoS integrand of the coverage probability factors as
//! `e^{a(u)λ} Σ_n κ_n(u) λ^{n+1}`. Differentiating in `λ` and bounding the
//! exponential weight yields a polynomial in `λ` whose first positive
//! downward zero crossing bounds the optimal density from below.

use std::f64::consts::PI;

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{nilpotent_exp_column, toeplitz_coeffs, toeplitz_l1, CoverageKernel, ToeplitzCoeffs};
use crate::error::{Error, Result};
use crate::model::NetworkConfig;
use crate::specfun::QuadratureRule;

/// Highest degree handled by companion-matrix eigenvalues.
const COMPANION_MAX_DEGREE: usize = 12;
/// Imaginary parts below this fraction of the spectral radius count as real.
const REAL_ROOT_TOL: f64 = 1e-9;
/// Sign-scan upper limit, in units of 1/(πR²).
const SCAN_MAX: f64 = 1e3;

/// `a(u) = π(c_0(u) + h²)`.
pub fn a_of_u(u: f64, tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    let c = toeplitz_coeffs(u, tau, cfg)?;
    Ok(a_from_coeffs(&c, cfg.altitude))
}

fn a_from_coeffs(c: &ToeplitzCoeffs, altitude: f64) -> f64 {
    PI * (c.c0() + altitude * altitude)
}

/// `κ_n = π^{n+1} ‖Nⁿ‖₁ / n!` for the strictly lower part `N` of `C`.
pub fn kappa_from_coeffs(c: &ToeplitzCoeffs, n: usize) -> f64 {
    let m = c.len();
    if n >= m {
        return 0.0;
    }
    // First column of Nⁿ as an n-fold truncated series product.
    let mut col = vec![0.0; m];
    col[0] = 1.0;
    let mut factorial = 1.0;
    for k in 1..=n {
        let mut next = vec![0.0; m];
        for i in 0..m {
            if col[i] == 0.0 {
                continue;
            }
            for j in 1..m - i {
                next[i + j] += col[i] * c.entries[j];
            }
        }
        col = next;
        factorial *= k as f64;
    }
    PI.powi(n as i32 + 1) * toeplitz_l1(&col) / factorial
}

pub fn kappa_n(u: f64, n: usize, tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    Ok(kappa_from_coeffs(&toeplitz_coeffs(u, tau, cfg)?, n))
}

/// Both sides of the integrand factorization at `(u, λ)`:
/// `πλ e^{πλh²} ‖e^{πλC(u)}‖₁` and `e^{a(u)λ} Σ κ_n(u) λ^{n+1}`.
pub fn integrand_identity_sides(u: f64, lambda: f64, tau: f64, cfg: &NetworkConfig) -> Result<(f64, f64)> {
    if !(lambda > 0.0) {
        return Err(Error::domain("integrand_identity", format!("density {lambda} must be positive")));
    }
    let c = toeplitz_coeffs(u, tau, cfg)?;
    let scale = PI * lambda;
    let h2 = cfg.altitude * cfg.altitude;
    let col = nilpotent_exp_column(&c.entries, scale);
    let lhs = scale * (scale * (h2 + c.c0())).exp() * toeplitz_l1(&col);
    let a = a_from_coeffs(&c, cfg.altitude);
    let sum: f64 = (0..c.len()).map(|n| kappa_from_coeffs(&c, n) * lambda.powi(n as i32 + 1)).sum();
    Ok((lhs, (a * lambda).exp() * sum))
}

/// Absolute difference of the two sides of the integrand factorization.
pub fn integrand_identity_gap(u: f64, lambda: f64, tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    let (lhs, rhs) = integrand_identity_sides(u, lambda, tau, cfg)?;
    Ok((lhs - rhs).abs())
}

/// `Σ β_n λⁿ`, the density-derivative lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityPolynomial {
    /// `β_0..β_{M_L}` in SI units (coefficient of `λⁿ` with `λ` in m⁻²).
    pub coefficients: Vec<f64>,
    /// Same polynomial in the variable `x = πR²λ`.
    pub scaled: Vec<f64>,
    pub tau: f64,
    pub config: NetworkConfig,
}

impl DensityPolynomial {
    /// `πR²`, the density unit used for the scaled polynomial.
    pub fn density_unit(&self) -> f64 {
        PI * self.config.los_radius * self.config.los_radius
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        horner(&self.scaled, lambda * self.density_unit())
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

fn horner_derivative(c: &[f64], x: f64) -> f64 {
    c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, &ci)| acc * x + k as f64 * ci)
}

pub fn beta_coeffs(tau: f64, cfg: &NetworkConfig, order: usize) -> Result<DensityPolynomial> {
    if !(tau > 0.0) {
        return Err(Error::domain("beta_coeffs", format!("tau = {tau} must be positive")));
    }
    let m = cfg.channel.m_los as usize;
    let r2 = cfg.los_radius * cfg.los_radius;
    let rule = QuadratureRule::gauss_legendre(order)?;
    let nodes: Vec<(f64, f64)> = rule.mapped(0.0, r2).collect();
    // (a(u), κ_0..κ_{M-1}) at each node
    let table = nodes
        .par_iter()
        .map(|&(u, _)| {
            let c = toeplitz_coeffs(u, tau, cfg)?;
            let kappas: Vec<f64> = (0..m).map(|n| kappa_from_coeffs(&c, n)).collect();
            Ok((a_from_coeffs(&c, cfg.altitude), kappas))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut beta = vec![0.0; m + 1];
    beta[0] = PI * r2;
    for n in 1..=m {
        let integrand = |(a, k): &(f64, Vec<f64>)| {
            let tail = if n < m { (n as f64 + 1.0) * k[n] } else { 0.0 };
            a * k[n - 1] + tail
        };
        beta[n] = nodes.iter().zip(&table).map(|(&(_, w), row)| w * integrand(row)).sum();
    }
    let unit = PI * r2;
    let scaled = beta.iter().enumerate().map(|(n, b)| b / unit.powi(n as i32)).collect();
    Ok(DensityPolynomial { coefficients: beta, scaled, tau, config: cfg.clone() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityOptimum {
    /// Lower bound on the optimal density (m⁻²).
    pub lambda_lb: f64,
    /// Grid-search optimum (m⁻²), when computed.
    pub lambda_star_grid: Option<f64>,
    /// Every real root of the polynomial (m⁻²), ascending.
    pub all_real_roots: Vec<f64>,
}

/// Real roots of `Σ c_n xⁿ`, ascending, from companion-matrix eigenvalues.
fn companion_real_roots(c: &[f64]) -> Vec<f64> {
    let mut deg = c.len() - 1;
    while deg > 0 && c[deg] == 0.0 {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    let eig = comp.complex_eigenvalues();
    let radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut roots: Vec<f64> = eig
        .iter()
        .filter(|z| z.im.abs() <= REAL_ROOT_TOL * radius.max(f64::MIN_POSITIVE))
        .map(|z| polish_root(&c[..=deg], z.re))
        .collect();
    roots.sort_by(|a, b| a.total_cmp(b));
    roots
}

fn polish_root(c: &[f64], mut x: f64) -> f64 {
    for _ in 0..8 {
        let d = horner_derivative(c, x);
        if d == 0.0 {
            break;
        }
        let step = horner(c, x) / d;
        if !step.is_finite() {
            break;
        }
        x -= step;
        if step.abs() <= 1e-15 * x.abs() {
            break;
        }
    }
    x
}

/// First `+ → -` sign change on `(0, SCAN_MAX]`, refined by bisection.
fn scan_first_crossing(c: &[f64]) -> Option<f64> {
    const STEPS: usize = 4000;
    let lo_exp = -8.0f64;
    let hi_exp = SCAN_MAX.log10();
    let mut prev_x = 0.0;
    let mut prev_v = horner(c, 0.0);
    for i in 0..=STEPS {
        let x = 10f64.powf(lo_exp + (hi_exp - lo_exp) * i as f64 / STEPS as f64);
        let v = horner(c, x);
        if prev_v > 0.0 && v < 0.0 {
            let (mut a, mut b) = (prev_x, x);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if horner(c, mid) > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Some(0.5 * (a + b));
        }
        prev_x = x;
        prev_v = v;
    }
    None
}

/// Smallest positive density where the derivative bound turns negative.
pub fn lambda_lower_bound_from(poly: &DensityPolynomial) -> Result<DensityOptimum> {
    let c = &poly.scaled;
    let unit = poly.density_unit();
    if !(unit > 0.0) {
        return Err(Error::NoRoot("LoS radius is zero; the polynomial is degenerate".into()));
    }
    let real_roots = if poly.degree() <= COMPANION_MAX_DEGREE { companion_real_roots(c) } else { Vec::new() };
    let crossing = real_roots
        .iter()
        .copied()
        .filter(|&x| x > 0.0)
        .find(|&x| horner_derivative(c, x) < 0.0)
        .or_else(|| scan_first_crossing(c));
    let Some(x) = crossing else {
        return Err(Error::NoRoot(format!(
            "no positive +/- crossing of sum beta_n lambda^n, beta = {:?}",
            poly.coefficients
        )));
    };
    let magnitude = c.iter().enumerate().map(|(n, v)| (v * x.powi(n as i32)).abs()).fold(0.0, f64::max);
    if horner(c, x).abs() > 1e-8 * magnitude {
        return Err(Error::Numerical(format!("root {x} does not zero the density polynomial")));
    }
    Ok(DensityOptimum {
        lambda_lb: x / unit,
        lambda_star_grid: None,
        all_real_roots: real_roots.iter().map(|r| r / unit).collect(),
    })
}

pub fn lambda_lower_bound(tau: f64, cfg: &NetworkConfig, order: usize) -> Result<DensityOptimum> {
    if !(cfg.los_radius > 0.0) {
        return Err(Error::domain("lambda_lower_bound", "LoS radius must be positive"));
    }
    lambda_lower_bound_from(&beta_coeffs(tau, cfg, order)?)
}

/// Density grid in m⁻².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub log: bool,
}

impl DensityGrid {
    pub fn log_spaced(lo: f64, hi: f64, points: usize) -> Self {
        Self { lo, hi, points, log: true }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 || !(self.lo > 0.0) || !(self.hi >= self.lo) {
            return Err(Error::Config(format!("invalid density grid {self:?}")));
        }
        if self.points == 1 {
            return Ok(vec![self.lo]);
        }
        let n = (self.points - 1) as f64;
        let last = self.points - 1;
        Ok((0..self.points)
            .map(|i| {
                if i == 0 {
                    return self.lo;
                }
                if i == last {
                    return self.hi;
                }
                let t = i as f64 / n;
                if self.log {
                    (self.lo.ln() + t * (self.hi.ln() - self.lo.ln())).exp()
                } else {
                    self.lo + t * (self.hi - self.lo)
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptimum {
    /// Refined maximizer (m⁻²).
    pub lambda_star: f64,
    pub coverage: f64,
    pub argmax_index: usize,
    /// The grid maximum is not at either end of the grid.
    pub interior: bool,
    /// At most one interior local maximum on the grid.
    pub unimodal: bool,
    /// `(density, coverage)` on the grid.
    pub curve: Vec<(f64, f64)>,
}

/// Coverage curve over a density grid with its maximizer, refined by
/// golden-section search in `ln λ` between the neighbours of the grid argmax.
pub fn lambda_star_grid(tau: f64, cfg: &NetworkConfig, grid: &DensityGrid, order: usize) -> Result<GridOptimum> {
    let lambdas = grid.values()?;
    let kernel = CoverageKernel::new(tau, cfg, order)?;
    let curve: Vec<(f64, f64)> = lambdas.iter().map(|&l| (l, kernel.evaluate(l).total)).collect();
    let (idx, &(grid_lambda, grid_p)) = curve
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, &(f64, f64))>, (i, pt)| match best {
            Some((_, b)) if b.1 >= pt.1 => best,
            _ => Some((i, pt)),
        })
        .expect("grid is non-empty");
    let last = curve.len() - 1;
    let interior = idx != 0 && idx != last;
    let local_maxima = (1..last).filter(|&i| curve[i - 1].1 < curve[i].1 && curve[i + 1].1 < curve[i].1).count();
    let unimodal = local_maxima <= 1;
    if !unimodal {
        warn!("coverage-vs-density curve has {local_maxima} interior local maxima at tau = {tau}");
    }

    let (mut lambda_star, mut coverage) = (grid_lambda, grid_p);
    if curve.len() > 1 {
        let lo = curve[idx.saturating_sub(1)].0.ln();
        let hi = curve[(idx + 1).min(last)].0.ln();
        let f = |x: f64| kernel.evaluate(x.exp()).total;
        let x = golden_section_max(f, lo, hi, 1e-10);
        let p = f(x);
        if p >= coverage {
            lambda_star = x.exp();
            coverage = p;
        }
    }
    Ok(GridOptimum { lambda_star, coverage, argmax_index: idx, interior, unimodal, curve })
}

fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Numerically evaluates `∂p_c/∂λ` by central differences of the coverage.
pub fn coverage_slope(kernel: &CoverageKernel, lambda: f64) -> f64 {
    let h = 1e-4 * lambda;
    (kernel.evaluate(lambda + h).total - kernel.evaluate(lambda - h).total) / (2.0 * h)
}
