//! Analytical SIR coverage under the LoS-ball blockage model.
//!
//! Conditioned on a LoS server at squared ground distance `u`, the Laplace
//! transform of the interference is `exp(η(s))` with
//! `s = M_L τ (u+h²)^{α_L/2} / (G_s A_L)`. The coverage sum
//! `Σ_n (-s)ⁿ/n! L⁽ⁿ⁾(s)` equals the induced ℓ₁ norm of the exponential of a
//! lower-triangular Toeplitz matrix whose entries are `(-s)ⁿ/n! η⁽ⁿ⁾(s)`.
//!
//! [`ToeplitzCoeffs`] stores those entries divided by `πλ` (they do not
//! depend on the density) with every `n = 0` constant folded in, so that
//! `η(s) = πλ (c_0 + u + h²)`. Consequently
//! `p_{c,L|u} = e^{πλ(u+h²)} ‖e^{πλ C}‖₁` and the LoS part of the total
//! coverage is `πλ e^{πλh²} ∫₀^{R²} ‖e^{πλ C(u)}‖₁ du`.

use std::f64::consts::PI;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{delta, LinkClass, NetworkConfig};
use crate::specfun::{gauss_2f1_nonpos, inc_beta_cont, QuadratureRule};

/// Relative change between order `n` and `2n` above which a warning is logged.
pub const ORDER_DOUBLING_TOL: f64 = 1e-6;

const POLE_GUARD: f64 = 1e-9;
const POLE_SHIFT: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirQuery {
    tau: f64,
}

impl SirQuery {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::domain("SirQuery", format!("threshold {tau} must be positive")));
        }
        Ok(Self { tau })
    }

    pub fn from_db(tau_db: f64) -> Result<Self> {
        Self::new(10f64.powf(tau_db / 10.0))
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// First column `c_0..c_{M_L-1}` of the Toeplitz matrix `C_{M_L}(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzCoeffs {
    pub entries: Vec<f64>,
    /// Squared serving ground distance.
    pub u: f64,
}

impl ToeplitzCoeffs {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn c0(&self) -> f64 {
        self.entries[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub total: f64,
    pub los_term: f64,
    pub nlos_term: f64,
    pub quadrature_order: usize,
}

/// `∫₀ʸ v^{a-1}(1+v)^{b-1} dv`, continued in `a`.
fn fused_beta(y: f64, a: f64, b: f64) -> Result<f64> {
    inc_beta_cont(-y, a, b)
}

/// Nudges `δ` off the pole set `{n - δ ∈ ℤ≤0 : 0 ≤ n < n_max}`.
fn guard_delta(delta: f64, n_max: usize) -> f64 {
    for n in 0..n_max {
        let a = n as f64 - delta;
        if a <= POLE_GUARD && (a - a.round()).abs() < POLE_GUARD {
            warn!("n - delta = {a} sits on an incomplete-Beta pole; shifting delta by {POLE_SHIFT}");
            return delta + POLE_SHIFT;
        }
    }
    delta
}

/// Laplace argument `s` for a LoS server at squared ground distance `u`.
pub fn los_laplace_arg(u: f64, tau: f64, cfg: &NetworkConfig) -> f64 {
    let ch = &cfg.channel;
    let h2 = cfg.altitude * cfg.altitude;
    ch.m_los as f64 * tau * (u + h2).powf(0.5 * ch.alpha_los) / ch.mean_gain(LinkClass::Los)
}

/// `Σ_{j=1}^{m} ∫₀ʸ v^{-δ}(1+v)^{-j} dv = ∫₀ʸ (1 - (1+v)^{-m}) v^{-δ-1} dv`.
fn fading_kernel(y: f64, delta: f64, m: u32) -> Result<f64> {
    if y == 0.0 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for j in 1..=m {
        acc += fused_beta(y, 1.0 - delta, 1.0 - j as f64)?;
    }
    Ok(acc)
}

/// Log-Laplace transform of the NLoS interference from outside the LoS ball,
/// `-πλ ∫_{R²+h²}^∞ (1 - E_g[exp(-s g x^{-α_N/2})]) dx` with Rayleigh `g`.
///
/// This is the closed form `πλD (1 + δ c^δ E_g[g^δ γ(-δ, c g)])`,
/// `c = s D^{-α_N/2}`, whose Gamma expectation reduces for unit Nakagami
/// shape to an incomplete-Beta integral.
pub fn log_laplace_nlos(s: f64, cfg: &NetworkConfig) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::domain("log_laplace_nlos", format!("s = {s} must be non-negative")));
    }
    if s == 0.0 || cfg.density == 0.0 {
        return Ok(0.0);
    }
    let ch = &cfg.channel;
    let d = cfg.los_radius * cfg.los_radius + cfg.altitude * cfg.altitude;
    let dn = delta(LinkClass::Nlos, ch);
    let b = s * ch.mean_gain(LinkClass::Nlos);
    // -πλ δ b^δ ∫₀^{y_D} y^{-δ}(1+y)^{-1} dy, written with D to avoid b^δ overflow.
    let y_d = b * d.powf(-0.5 * ch.alpha_nlos);
    let scale = dn * d * y_d.powf(dn);
    Ok(-PI * cfg.density * scale * fading_kernel(y_d, dn, ch.m_nlos)?)
}

/// Log-Laplace transform of the LoS interference from the annulus
/// `√u ≤ r ≤ R`, `-2πλ ∫_{√u}^R (1 - E_g[exp(-s g (r²+h²)^{-α_L/2})]) r dr`.
pub fn log_laplace_los(s: f64, u: f64, cfg: &NetworkConfig) -> Result<f64> {
    let r2 = cfg.los_radius * cfg.los_radius;
    if !(u >= 0.0 && u <= r2) {
        return Err(Error::domain("log_laplace_los", format!("u = {u} outside [0, R² = {r2}]")));
    }
    if !(s >= 0.0) {
        return Err(Error::domain("log_laplace_los", format!("s = {s} must be non-negative")));
    }
    if s == 0.0 || u == r2 || cfg.density == 0.0 {
        return Ok(0.0);
    }
    let ch = &cfg.channel;
    let h2 = cfg.altitude * cfg.altitude;
    let m = ch.m_los;
    let dl = delta(LinkClass::Los, ch);
    let b = s * ch.mean_gain(LinkClass::Los) / m as f64;
    let x_in = u + h2;
    let x_out = r2 + h2;
    let y_in = b * x_in.powf(-0.5 * ch.alpha_los);
    let y_out = b * x_out.powf(-0.5 * ch.alpha_los);
    // δ b^δ [K(y_in) - K(y_out)], with b^δ = y_in^δ · x_in
    let k = fading_kernel(y_in, dl, m)? - fading_kernel(y_out, dl, m)?;
    Ok(-PI * cfg.density * dl * x_in * y_in.powf(dl) * k)
}

/// Total log-Laplace transform for a LoS server at `u`.
pub fn log_laplace(s: f64, u: f64, cfg: &NetworkConfig) -> Result<f64> {
    Ok(log_laplace_los(s, u, cfg)? + log_laplace_nlos(s, cfg)?)
}

/// Quadrature form of `η(s)/(πλ)`, independent of the hypergeometric
/// closed forms. Both branches reduce to `-Σ w_i φ_{M_i}(s·y_i)` with
/// `φ_M(y) = 1 - (1+y)^{-M}`, on fixed nodes, so the result is a smooth
/// function of `s` and may be finite-differenced.
#[derive(Debug, Clone)]
pub struct LaplaceQuadrature {
    /// `(weight, y_i, M_i)`.
    nodes: Vec<(f64, f64, i32)>,
}

fn fading_complement(y: f64, m: i32) -> f64 {
    -(-f64::from(m) * y.ln_1p()).exp_m1()
}

impl LaplaceQuadrature {
    pub const PANELS: usize = 16;
    pub const ORDER: usize = 48;

    pub fn new(u: f64, cfg: &NetworkConfig) -> Result<Self> {
        let r2 = cfg.los_radius * cfg.los_radius;
        if !(u >= 0.0 && u <= r2) {
            return Err(Error::domain("log_laplace_quadrature", format!("u = {u} outside [0, R²]")));
        }
        let rule = QuadratureRule::gauss_legendre(Self::ORDER)?;
        let ch = &cfg.channel;
        let h2 = cfg.altitude * cfg.altitude;
        let mut nodes = Vec::with_capacity(2 * Self::PANELS * Self::ORDER);

        let m = ch.m_los as i32;
        let b_l = ch.mean_gain(LinkClass::Los) / f64::from(m);
        let half_l = 0.5 * ch.alpha_los;
        panel_nodes(u + h2, r2 + h2, &rule, |x, w| nodes.push((w, b_l * x.powf(-half_l), m)));

        // x = D v^{-p} with p(α/2 - 1) = 2 keeps the tail integrand polynomial-like.
        let d = r2 + h2;
        let alpha = ch.alpha_nlos;
        let p = 4.0 / (alpha - 2.0);
        let y_d = ch.mean_gain(LinkClass::Nlos) * d.powf(-0.5 * alpha);
        let q = p * 0.5 * alpha;
        panel_nodes(0.0, 1.0, &rule, |v, w| {
            if v > 0.0 {
                nodes.push((w * p * d * v.powf(1.0 - q), y_d * v.powf(q), 1));
            }
        });
        Ok(Self { nodes })
    }

    pub fn eval(&self, s: f64) -> f64 {
        -self.nodes.iter().map(|&(w, y, m)| w * fading_complement(s * y, m)).sum::<f64>()
    }

    /// `n`-th central difference of [`eval`](Self::eval) at `s` with spacing
    /// `h`, formed node by node. Nodes with `s·y_i ≥ 1` difference
    /// `-(1+y)^{-M}` in place of `φ_M`, which has the same differences for
    /// `n ≥ 1` but no cancellation against the constant.
    pub fn central_difference(&self, s: f64, n: usize, h: f64) -> f64 {
        let mut stencil = Vec::with_capacity(n + 1);
        let mut binom = 1.0;
        for k in 0..=n {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            stencil.push((sign * binom, s + (0.5 * n as f64 - k as f64) * h));
            binom *= (n - k) as f64 / (k + 1) as f64;
        }
        let total: f64 = self
            .nodes
            .iter()
            .map(|&(w, y, m)| {
                let saturated = n > 0 && s * y >= 1.0;
                let acc: f64 = stencil
                    .iter()
                    .map(|&(c, sk)| {
                        let v = if saturated {
                            -(-f64::from(m) * (sk * y).ln_1p()).exp()
                        } else {
                            fading_complement(sk * y, m)
                        };
                        c * v
                    })
                    .sum();
                w * acc
            })
            .sum();
        -total / h.powi(n as i32)
    }
}

fn panel_nodes<F: FnMut(f64, f64)>(lo: f64, hi: f64, rule: &QuadratureRule, mut push: F) {
    let panels = LaplaceQuadrature::PANELS;
    let width = (hi - lo) / panels as f64;
    for k in 0..panels {
        let a = lo + k as f64 * width;
        for (x, w) in rule.mapped(a, a + width) {
            push(x, w);
        }
    }
}

/// `η(s)/(πλ)` by [`LaplaceQuadrature`].
pub fn log_laplace_quadrature(s: f64, u: f64, cfg: &NetworkConfig) -> Result<f64> {
    Ok(LaplaceQuadrature::new(u, cfg)?.eval(s))
}

/// `N_0 = ₂F₁(-δ_N, 1; 1-δ_N; -τ)`, the NLoS-branch interference functional.
pub fn nlos_n0(tau: f64, ch: &crate::model::ChannelParams) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::domain("nlos_n0", format!("tau = {tau} must be positive")));
    }
    let dn = guard_delta(delta(LinkClass::Nlos, ch), 1);
    gauss_2f1_nonpos(-dn, 1.0, 1.0 - dn, -tau)
}

/// Coverage given an NLoS server at squared ground distance `u ≥ R²`.
pub fn cond_cov_nlos(u: f64, tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    let r2 = cfg.los_radius * cfg.los_radius;
    if !(u >= r2) {
        return Err(Error::domain("cond_cov_nlos", format!("u = {u} below R² = {r2}")));
    }
    let n0 = nlos_n0(tau, &cfg.channel)?;
    let h2 = cfg.altitude * cfg.altitude;
    Ok((PI * cfg.density * (u + h2) * (1.0 - n0)).exp())
}

/// Toeplitz entries `c_n(u)`, `n < M_L`, for threshold `τ`.
///
/// The density does not enter; `cfg.density` is ignored.
pub fn toeplitz_coeffs(u: f64, tau: f64, cfg: &NetworkConfig) -> Result<ToeplitzCoeffs> {
    let r2 = cfg.los_radius * cfg.los_radius;
    if !(u >= 0.0 && u <= r2) {
        return Err(Error::domain("toeplitz_coeffs", format!("u = {u} outside [0, R² = {r2}]")));
    }
    if !(tau > 0.0) {
        return Err(Error::domain("toeplitz_coeffs", format!("tau = {tau} must be positive")));
    }
    let ch = &cfg.channel;
    let m = ch.m_los as usize;
    let mf = m as f64;
    let h2 = cfg.altitude * cfg.altitude;
    let x_u = u + h2;
    let x_r = r2 + h2;
    let dl = guard_delta(delta(LinkClass::Los, ch), m);
    let dn = guard_delta(delta(LinkClass::Nlos, ch), m);
    let alpha_l = 2.0 / dl;
    let alpha_n = 2.0 / dn;

    // LoS annulus: Beta arguments τ and τq with q = (x_u/x_r)^{α_L/2}.
    let q = (x_u / x_r).powf(0.5 * alpha_l);
    let los_front = dl * x_u * tau.powf(dl);
    // NLoS far field: w = (τ M A_N/A_L) x_u^{α_L/2} / x_r^{α_N/2}.
    let ratio = tau * mf * ch.a_nlos / ch.a_los;
    let w = ratio * x_u.powf(0.5 * alpha_l) * x_r.powf(-0.5 * alpha_n);
    // δ_N ratio^{δ_N} x_u^{α_L/α_N} equals δ_N x_r w^{δ_N}.
    let nlos_front = dn * x_r * w.powf(dn);

    let mut entries = Vec::with_capacity(m);
    // (M)_n / n!
    let mut rising = 1.0;
    for n in 0..m {
        let nf = n as f64;
        if n > 0 {
            rising *= (mf + nf - 1.0) / nf;
        }
        let a_l = nf - dl;
        let b_l = 1.0 - nf - mf;
        let los = if u == r2 {
            0.0
        } else {
            rising * los_front * (fused_beta(tau, a_l, b_l)? - fused_beta(tau * q, a_l, b_l)?)
        };
        let nlos = nlos_front * fused_beta(w, nf - dn, -nf)?;
        entries.push(los + nlos);
    }
    Ok(ToeplitzCoeffs { entries, u })
}

/// First column of `exp(scale·N)` for the strictly lower-triangular part
/// `N` of the Toeplitz matrix, via the terminating power series.
pub(crate) fn nilpotent_exp_column(entries: &[f64], scale: f64) -> Vec<f64> {
    let m = entries.len();
    let mut total = vec![0.0; m];
    total[0] = 1.0;
    let mut power = total.clone();
    for k in 1..m {
        // power ← power · (scale N) / k, as truncated series products.
        let mut next = vec![0.0; m];
        for i in 0..m {
            if power[i] == 0.0 {
                continue;
            }
            for j in 1..m - i {
                next[i + j] += power[i] * scale * entries[j];
            }
        }
        for v in next.iter_mut() {
            *v /= k as f64;
        }
        for (t, v) in total.iter_mut().zip(&next) {
            *t += v;
        }
        power = next;
    }
    total
}

/// Induced ℓ₁ norm of a lower-triangular Toeplitz matrix given its first column.
pub(crate) fn toeplitz_l1(column: &[f64]) -> f64 {
    // Column j holds the first m-j entries of column 0.
    column.iter().map(|v| v.abs()).sum()
}

/// `‖exp(scale·C)‖₁` using `C = c_0 I + N` with `N` nilpotent.
pub fn toeplitz_exp_l1(coeffs: &ToeplitzCoeffs, scale: f64) -> f64 {
    let col = nilpotent_exp_column(&coeffs.entries, scale);
    (scale * coeffs.c0()).exp() * toeplitz_l1(&col)
}

/// Coverage given a LoS server at squared ground distance `u ≤ R²`.
pub fn cond_cov_los(u: f64, tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    if cfg.density == 0.0 {
        return Ok(1.0);
    }
    let coeffs = toeplitz_coeffs(u, tau, cfg)?;
    let scale = PI * cfg.density;
    let h2 = cfg.altitude * cfg.altitude;
    let col = nilpotent_exp_column(&coeffs.entries, scale);
    Ok((scale * (u + h2 + coeffs.c0())).exp() * toeplitz_l1(&col))
}

/// Density-independent pieces of the coverage integral at fixed `τ`,
/// reusable across many densities.
#[derive(Debug, Clone)]
pub struct CoverageKernel {
    n0: f64,
    h2: f64,
    r2: f64,
    order: usize,
    /// `(weight, coefficients)` at each quadrature node of `[0, R²]`.
    nodes: Vec<(f64, ToeplitzCoeffs)>,
}

impl CoverageKernel {
    pub fn new(tau: f64, cfg: &NetworkConfig, order: usize) -> Result<Self> {
        SirQuery::new(tau)?;
        let rule = QuadratureRule::gauss_legendre(order)?;
        let r2 = cfg.los_radius * cfg.los_radius;
        let h2 = cfg.altitude * cfg.altitude;
        let n0 = nlos_n0(tau, &cfg.channel)?;
        let nodes = if r2 > 0.0 {
            let mapped: Vec<(f64, f64)> = rule.mapped(0.0, r2).collect();
            mapped.par_iter().map(|&(u, w)| toeplitz_coeffs(u, tau, cfg).map(|c| (w, c))).collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(Self { n0, h2, r2, order, nodes })
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[(f64, ToeplitzCoeffs)] {
        &self.nodes
    }

    /// Coverage at density `lambda` (m⁻²).
    pub fn evaluate(&self, lambda: f64) -> CoverageResult {
        let scale = PI * lambda;
        let los_term = if lambda == 0.0 {
            0.0
        } else {
            let integral: f64 = self
                .nodes
                .iter()
                .map(|(w, c)| {
                    let col = nilpotent_exp_column(&c.entries, scale);
                    w * (scale * (self.h2 + c.c0())).exp() * toeplitz_l1(&col)
                })
                .sum();
            scale * integral
        };
        let nlos_term = (scale * (self.h2 - self.n0 * (self.h2 + self.r2))).exp() / self.n0;
        CoverageResult { total: los_term + nlos_term, los_term, nlos_term, quadrature_order: self.order }
    }
}

/// SIR coverage probability at threshold `τ`, with the LoS integral done by
/// an `order`-point Gauss–Legendre rule on `[0, R²]`.
pub fn coverage_probability(tau: f64, cfg: &NetworkConfig, order: usize) -> Result<CoverageResult> {
    let result = CoverageKernel::new(tau, cfg, order)?.evaluate(cfg.density);
    if !result.total.is_finite() {
        return Err(Error::Numerical(format!("non-finite coverage at tau = {tau}")));
    }
    let check = CoverageKernel::new(tau, cfg, 2 * order)?.evaluate(cfg.density);
    if (check.total - result.total).abs() > ORDER_DOUBLING_TOL {
        warn!(
            "coverage at tau = {tau} moved by {:.3e} when doubling quadrature order {order}",
            (check.total - result.total).abs()
        );
    }
    Ok(result)
}
