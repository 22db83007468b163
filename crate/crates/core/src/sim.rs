//! Monte Carlo simulation of the UAV downlink.
//!
//! Every trial draws a fresh PPP of GBSs on a disk around the UAV's ground
//! projection, classifies links, draws Gamma fading, associates with the
//! nearest GBS by ground distance and records SIR and SINR.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LinkClass, NetworkConfig};

/// Empty windows tolerated before a trial gives up.
pub const MAX_RESAMPLE: usize = 100;

/// LoS probability as a function of ground distance and altitude.
#[derive(Clone)]
pub struct LosProbability(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>);

impl LosProbability {
    pub fn new<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self(Arc::new(f))
    }

    pub fn eval(&self, r: f64, h: f64) -> f64 {
        (self.0)(r, h).clamp(0.0, 1.0)
    }
}

impl fmt::Debug for LosProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("LosProbability(..)")
    }
}

#[derive(Debug, Clone)]
pub enum LosModel {
    /// Every GBS within ground distance `radius` is LoS.
    Ball {
        radius: f64,
    },
    Probabilistic(LosProbability),
}

impl LosModel {
    pub fn ball(radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::Config(format!("LoS ball radius {radius} must be finite and non-negative")));
        }
        Ok(Self::Ball { radius })
    }

    /// Logistic in elevation angle: `1 / (1 + a·exp(-b(θ - a)))`, `θ` in degrees.
    pub fn logistic(a: f64, b: f64) -> Self {
        Self::Probabilistic(LosProbability::new(move |r, h| {
            let theta = h.atan2(r).to_degrees();
            1.0 / (1.0 + a * (-b * (theta - a)).exp())
        }))
    }

    /// Urban-environment logistic parameters.
    pub fn urban_logistic() -> Self {
        Self::logistic(9.61, 0.16)
    }

    pub fn for_config(cfg: &NetworkConfig) -> Self {
        Self::Ball { radius: cfg.los_radius }
    }
}

/// Sampling disk around the UAV's ground projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimWindow {
    pub radius: f64,
}

impl SimWindow {
    pub fn new(radius: f64, cfg: &NetworkConfig) -> Result<Self> {
        if !(radius >= cfg.los_radius) || !radius.is_finite() {
            return Err(Error::Config(format!(
                "window radius {radius} must be finite and cover the LoS radius {}",
                cfg.los_radius
            )));
        }
        Ok(Self { radius })
    }

    /// `max(5R, 12/√(πλ))`.
    pub fn default_for(cfg: &NetworkConfig) -> Self {
        let spread = if cfg.density > 0.0 { 12.0 / (PI * cfg.density).sqrt() } else { 0.0 };
        Self { radius: (5.0 * cfg.los_radius).max(spread) }
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

/// Homogeneous PPP on the window disk.
pub fn sample_ppp<R: Rng + ?Sized>(density: f64, window: SimWindow, rng: &mut R) -> Vec<[f64; 2]> {
    let mean = density * window.area();
    if !(mean > 0.0) {
        return Vec::new();
    }
    let count = Poisson::new(mean).expect("positive finite mean").sample(rng) as usize;
    (0..count)
        .map(|_| {
            let r = window.radius * rng.random::<f64>().sqrt();
            let phi = 2.0 * PI * rng.random::<f64>();
            [r * phi.cos(), r * phi.sin()]
        })
        .collect()
}

pub fn classify<R: Rng + ?Sized>(point: [f64; 2], model: &LosModel, altitude: f64, rng: &mut R) -> LinkClass {
    let r = point[0].hypot(point[1]);
    let los = match model {
        LosModel::Ball { radius } => r <= *radius,
        LosModel::Probabilistic(p) => rng.random::<f64>() < p.eval(r, altitude),
    };
    if los {
        LinkClass::Los
    } else {
        LinkClass::Nlos
    }
}

/// Fading samplers for both link classes.
#[derive(Debug, Clone, Copy)]
pub struct GainSampler {
    los: Gamma<f64>,
    nlos: Gamma<f64>,
}

impl GainSampler {
    pub fn new(ch: &crate::model::ChannelParams) -> Result<Self> {
        let make = |class| {
            let m = f64::from(ch.nakagami(class));
            Gamma::new(m, ch.mean_gain(class) / m)
                .map_err(|e| Error::Config(format!("invalid {class:?} fading parameters: {e}")))
        };
        Ok(Self { los: make(LinkClass::Los)?, nlos: make(LinkClass::Nlos)? })
    }

    pub fn sample<R: Rng + ?Sized>(&self, class: LinkClass, rng: &mut R) -> f64 {
        match class {
            LinkClass::Los => self.los.sample(rng),
            LinkClass::Nlos => self.nlos.sample(rng),
        }
    }
}

/// `Gamma(M_v, G_s·A_v/M_v)` power gain.
pub fn sample_gain<R: Rng + ?Sized>(class: LinkClass, ch: &crate::model::ChannelParams, rng: &mut R) -> Result<f64> {
    Ok(GainSampler::new(ch)?.sample(class, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// `+∞` when there is no interferer.
    pub sir: f64,
    pub sinr: f64,
    pub serving_class: LinkClass,
    /// Ground distance to the serving GBS (m).
    pub serving_distance: f64,
}

fn received(d2: f64, class: LinkClass, gain: f64, cfg: &NetworkConfig) -> f64 {
    let h2 = cfg.altitude * cfg.altitude;
    gain * (d2 + h2).powf(-0.5 * cfg.channel.alpha(class))
}

/// Signal and interference for one realization with the server at index `serving`.
fn link_budget<R: Rng + ?Sized>(
    points: &[[f64; 2]],
    serving: usize,
    cfg: &NetworkConfig,
    model: &LosModel,
    gains: &GainSampler,
    rng: &mut R,
) -> (f64, f64, LinkClass) {
    let mut signal = 0.0;
    let mut interference = 0.0;
    let mut serving_class = LinkClass::Nlos;
    for (i, p) in points.iter().enumerate() {
        let class = classify(*p, model, cfg.altitude, rng);
        let power = received(p[0] * p[0] + p[1] * p[1], class, gains.sample(class, rng), cfg);
        if i == serving {
            signal = power;
            serving_class = class;
        } else {
            interference += power;
        }
    }
    (signal, interference, serving_class)
}

fn ratios(signal: f64, interference: f64, noise: f64) -> (f64, f64) {
    let sir = if interference > 0.0 { signal / interference } else { f64::INFINITY };
    (sir, signal / (interference + noise))
}

/// One network realization, resampling empty windows.
pub fn trial<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    model: &LosModel,
    window: SimWindow,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let gains = GainSampler::new(&cfg.channel)?;
    trial_with(cfg, model, window, &gains, rng)
}

fn trial_with<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    model: &LosModel,
    window: SimWindow,
    gains: &GainSampler,
    rng: &mut R,
) -> Result<TrialOutcome> {
    for _ in 0..MAX_RESAMPLE {
        let points = sample_ppp(cfg.density, window, rng);
        let Some((serving, r2)) =
            points.iter().map(|p| p[0] * p[0] + p[1] * p[1]).enumerate().min_by(|a, b| a.1.total_cmp(&b.1))
        else {
            continue;
        };
        let (signal, interference, serving_class) = link_budget(&points, serving, cfg, model, gains, rng);
        let (sir, sinr) = ratios(signal, interference, cfg.normalized_noise());
        return Ok(TrialOutcome { sir, sinr, serving_class, serving_distance: r2.sqrt() });
    }
    Err(Error::ResampleExhausted { attempts: MAX_RESAMPLE })
}

/// SIR with the server pinned at ground distance `r0` and every GBS closer
/// than `r0` removed.
pub fn conditional_trial<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    model: &LosModel,
    r0: f64,
    window: SimWindow,
    gains: &GainSampler,
    rng: &mut R,
) -> f64 {
    let r0_sq = r0 * r0;
    let mut points = vec![[r0, 0.0]];
    points.extend(sample_ppp(cfg.density, window, rng).into_iter().filter(|p| p[0] * p[0] + p[1] * p[1] > r0_sq));
    let (signal, interference, _) = link_budget(&points, 0, cfg, model, gains, rng);
    ratios(signal, interference, cfg.normalized_noise()).0
}

/// Per-trial generator: stream `index` of the seed.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `trials` independent realizations, ordered by trial index.
pub fn simulate_trials(
    cfg: &NetworkConfig,
    model: &LosModel,
    window: SimWindow,
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialOutcome>> {
    let gains = GainSampler::new(&cfg.channel)?;
    (0..trials as u64)
        .into_par_iter()
        .map(|i| trial_with(cfg, model, window, &gains, &mut trial_rng(seed, i)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Sir,
    Sinr,
}

impl Metric {
    pub fn of(self, outcome: &TrialOutcome) -> f64 {
        match self {
            Metric::Sir => outcome.sir,
            Metric::Sinr => outcome.sinr,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Sir => "sir",
            Metric::Sinr => "sinr",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub tau: f64,
    pub coverage: f64,
    pub trials: usize,
    /// `√(p̂(1-p̂)/n)`.
    pub stderr: f64,
    pub seed: u64,
    pub metric: Metric,
}

/// Coverage at each threshold from a shared set of realizations.
pub fn estimates_from_outcomes(outcomes: &[TrialOutcome], taus: &[f64], metric: Metric, seed: u64) -> Vec<McEstimate> {
    let n = outcomes.len();
    taus.iter()
        .map(|&tau| {
            let hits = outcomes.iter().filter(|o| metric.of(o) > tau).count();
            let p = hits as f64 / n as f64;
            McEstimate { tau, coverage: p, trials: n, stderr: (p * (1.0 - p) / n as f64).sqrt(), seed, metric }
        })
        .collect()
}

pub fn estimate_coverage(
    cfg: &NetworkConfig,
    model: &LosModel,
    taus: &[f64],
    trials: usize,
    seed: u64,
    metric: Metric,
) -> Result<Vec<McEstimate>> {
    if trials == 0 {
        return Err(Error::Config("trial count must be positive".into()));
    }
    let outcomes = simulate_trials(cfg, model, SimWindow::default_for(cfg), trials, seed)?;
    Ok(estimates_from_outcomes(&outcomes, taus, metric, seed))
}
