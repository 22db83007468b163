//! Network and channel model: parameters, path loss, LoS-ball geometry,
//! association probabilities and serving-distance densities.
//!
//! All quantities are SI: metres, GBS per square metre, watts, linear gains.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkClass {
    Los,
    Nlos,
}

/// Per-class propagation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    /// Path loss at 1 m for LoS links (linear).
    pub a_los: f64,
    /// Path loss at 1 m for NLoS links (linear).
    pub a_nlos: f64,
    pub m_los: u32,
    /// Always 1: NLoS links are Rayleigh faded.
    pub m_nlos: u32,
    /// Sidelobe gain applied to every GBS (linear).
    pub sidelobe_gain: f64,
}

impl ChannelParams {
    pub fn new(alpha_los: f64, alpha_nlos: f64, a_los: f64, a_nlos: f64, m_los: u32) -> Result<Self> {
        let ch = Self { alpha_los, alpha_nlos, a_los, a_nlos, m_los, m_nlos: 1, sidelobe_gain: 1.0 };
        ch.validate()?;
        Ok(ch)
    }

    pub fn with_sidelobe_gain(mut self, gain: f64) -> Result<Self> {
        self.sidelobe_gain = gain;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha_los", self.alpha_los),
            ("alpha_nlos", self.alpha_nlos),
            ("a_los", self.a_los),
            ("a_nlos", self.a_nlos),
            ("sidelobe_gain", self.sidelobe_gain),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.m_los < 1 {
            return Err(Error::Config("m_los must be at least 1".into()));
        }
        if self.m_nlos != 1 {
            return Err(Error::Config(format!("m_nlos must be 1 (Rayleigh), got {}", self.m_nlos)));
        }
        if self.alpha_nlos < self.alpha_los {
            return Err(Error::Config(format!(
                "alpha_nlos ({}) must be at least alpha_los ({})",
                self.alpha_nlos, self.alpha_los
            )));
        }
        // The unbounded NLoS field only has finite interference for α_N > 2.
        if self.alpha_nlos <= 2.0 {
            return Err(Error::Config(format!("alpha_nlos must exceed 2, got {}", self.alpha_nlos)));
        }
        Ok(())
    }

    pub fn alpha(&self, class: LinkClass) -> f64 {
        match class {
            LinkClass::Los => self.alpha_los,
            LinkClass::Nlos => self.alpha_nlos,
        }
    }

    pub fn reference_gain(&self, class: LinkClass) -> f64 {
        match class {
            LinkClass::Los => self.a_los,
            LinkClass::Nlos => self.a_nlos,
        }
    }

    /// Mean fading power gain `G_s·A_v`, the Gamma scale times the shape.
    pub fn mean_gain(&self, class: LinkClass) -> f64 {
        self.sidelobe_gain * self.reference_gain(class)
    }

    pub fn nakagami(&self, class: LinkClass) -> u32 {
        match class {
            LinkClass::Los => self.m_los,
            LinkClass::Nlos => self.m_nlos,
        }
    }
}

/// `δ_v = 2/α_v`.
pub fn delta(class: LinkClass, ch: &ChannelParams) -> f64 {
    2.0 / ch.alpha(class)
}

/// Path loss `A_v (r² + h²)^{-α_v/2}` for a GBS at squared ground distance `r²`.
pub fn path_loss(ground_dist_sq: f64, altitude: f64, class: LinkClass, ch: &ChannelParams) -> Result<f64> {
    if !(ground_dist_sq >= 0.0) {
        return Err(Error::domain("path_loss", format!("squared distance {ground_dist_sq} is negative")));
    }
    let d2 = ground_dist_sq + altitude * altitude;
    if d2 == 0.0 {
        return Err(Error::domain("path_loss", "zero link distance"));
    }
    Ok(ch.reference_gain(class) * d2.powf(-0.5 * ch.alpha(class)))
}

/// LoS radius as a function of UAV altitude. Must be non-decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LosRadiusMap {
    Constant {
        radius: f64,
    },
    /// `R = c0 + c1·h`
    Affine {
        c0: f64,
        c1: f64,
    },
    /// Piecewise linear through `(altitude, radius)` knots, clamped outside.
    Table {
        knots: Vec<(f64, f64)>,
    },
}

impl LosRadiusMap {
    pub fn validate(&self) -> Result<()> {
        match self {
            LosRadiusMap::Constant { radius } => {
                if !(*radius >= 0.0) {
                    return Err(Error::Config(format!("LoS radius {radius} must be non-negative")));
                }
            }
            LosRadiusMap::Affine { c0, c1 } => {
                if !(*c0 >= 0.0 && *c1 >= 0.0) {
                    return Err(Error::Config(format!("affine LoS radius needs c0, c1 >= 0, got {c0}, {c1}")));
                }
            }
            LosRadiusMap::Table { knots } => {
                if knots.is_empty() {
                    return Err(Error::Config("LoS radius table is empty".into()));
                }
                if knots.iter().any(|&(h, r)| !(h >= 0.0) || !(r >= 0.0)) {
                    return Err(Error::Config("LoS radius table entries must be non-negative".into()));
                }
                for w in knots.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::Config("LoS radius table altitudes must strictly increase".into()));
                    }
                    if w[1].1 < w[0].1 {
                        return Err(Error::Config("LoS radius table is not monotone in altitude".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn los_radius_at(map: &LosRadiusMap, h: f64) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(Error::domain("los_radius_at", format!("altitude {h} is negative")));
    }
    map.validate()?;
    Ok(match map {
        LosRadiusMap::Constant { radius } => *radius,
        LosRadiusMap::Affine { c0, c1 } => c0 + c1 * h,
        LosRadiusMap::Table { knots } => {
            let first = knots[0];
            let last = knots[knots.len() - 1];
            if h <= first.0 {
                first.1
            } else if h >= last.0 {
                last.1
            } else {
                let i = knots.partition_point(|k| k.0 <= h);
                let (h0, r0) = knots[i - 1];
                let (h1, r1) = knots[i];
                r0 + (r1 - r0) * (h - h0) / (h1 - h0)
            }
        }
    })
}

/// Full network description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// GBS density (m⁻²).
    pub density: f64,
    /// UAV altitude (m).
    pub altitude: f64,
    /// LoS ball radius (m).
    pub los_radius: f64,
    /// Transmit power (W).
    pub tx_power: f64,
    /// Noise power (W).
    pub noise_power: f64,
    pub channel: ChannelParams,
}

impl NetworkConfig {
    pub fn new(
        density: f64,
        altitude: f64,
        los_radius: f64,
        tx_power: f64,
        noise_power: f64,
        channel: ChannelParams,
    ) -> Result<Self> {
        let cfg = Self { density, altitude, los_radius, tx_power, noise_power, channel };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same as [`NetworkConfig::new`] with the radius taken from `map` at `altitude`.
    pub fn with_radius_map(
        density: f64,
        altitude: f64,
        map: &LosRadiusMap,
        tx_power: f64,
        noise_power: f64,
        channel: ChannelParams,
    ) -> Result<Self> {
        let r = los_radius_at(map, altitude)?;
        Self::new(density, altitude, r, tx_power, noise_power, channel)
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return Err(Error::Config(format!("density {} must be non-negative", self.density)));
        }
        if !(self.altitude >= 0.0 && self.altitude.is_finite()) {
            return Err(Error::Config(format!("altitude {} must be non-negative", self.altitude)));
        }
        if !(self.los_radius >= 0.0 && self.los_radius.is_finite()) {
            return Err(Error::Config(format!("LoS radius {} must be non-negative", self.los_radius)));
        }
        if !(self.tx_power > 0.0) || !(self.noise_power >= 0.0) || !self.normalized_noise().is_finite() {
            return Err(Error::Config("normalized noise σ²/P_t must be finite".into()));
        }
        Ok(())
    }

    pub fn with_density(&self, density: f64) -> Self {
        Self { density, ..self.clone() }
    }

    /// `σ_n² = σ²/P_t`.
    pub fn normalized_noise(&self) -> f64 {
        self.noise_power / self.tx_power
    }
}

/// Probability that the nearest GBS lies in (LoS) or outside (NLoS) the ball.
pub fn assoc_prob(class: LinkClass, density: f64, radius: f64) -> f64 {
    let p_nlos = (-PI * density * radius * radius).exp();
    match class {
        LinkClass::Los => -(-PI * density * radius * radius).exp_m1(),
        LinkClass::Nlos => p_nlos,
    }
}

/// Density of the serving ground distance conditioned on the serving class.
pub fn serving_dist_pdf(class: LinkClass, r: f64, cfg: &NetworkConfig) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::domain("serving_dist_pdf", format!("distance {r} is negative")));
    }
    let lambda = cfg.density;
    let big_r = cfg.los_radius;
    let p = assoc_prob(class, lambda, big_r);
    if p == 0.0 {
        return Err(Error::Degenerate(format!("{class:?} association has zero probability")));
    }
    let in_support = match class {
        LinkClass::Los => r <= big_r,
        LinkClass::Nlos => r >= big_r,
    };
    if !in_support {
        return Ok(0.0);
    }
    Ok(2.0 * PI * lambda * r * (-PI * lambda * r * r).exp() / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{quad_composite, QuadratureRule};
    use proptest::prelude::*;

    fn fig3_channel(m_los: u32) -> ChannelParams {
        ChannelParams::new(2.1, 4.0, 10f64.powf(-4.11), 10f64.powf(-3.29), m_los).unwrap()
    }

    #[test]
    fn path_loss_values() {
        let unit = ChannelParams::new(2.0, 4.0, 1.0, 1.0, 1).unwrap();
        assert!((path_loss(9.0, 4.0, LinkClass::Los, &unit).unwrap() - 0.04).abs() < 1e-16);
        let ch = fig3_channel(3);
        assert_eq!(path_loss(0.0, 1.0, LinkClass::Los, &ch).unwrap(), 10f64.powf(-4.11));
        let quartic = ChannelParams::new(4.0, 4.0, 2.0, 2.0, 1).unwrap();
        assert!((path_loss(1.0, 1.0, LinkClass::Nlos, &quartic).unwrap() - 0.5).abs() < 1e-16);
        assert!(path_loss(0.0, 0.0, LinkClass::Los, &ch).is_err());
        assert!(path_loss(-1.0, 3.0, LinkClass::Los, &ch).is_err());
    }

    #[test]
    fn delta_values() {
        let ch = fig3_channel(3);
        assert_eq!(delta(LinkClass::Nlos, &ch), 0.5);
        assert!((delta(LinkClass::Los, &ch) - 0.952_380_952_380_952_4).abs() < 1e-15);
        let sq = ChannelParams::new(2.0, 4.0, 1.0, 1.0, 1).unwrap();
        assert_eq!(delta(LinkClass::Los, &sq), 1.0);
    }

    #[test]
    fn channel_validation() {
        assert!(ChannelParams::new(4.0, 3.0, 1.0, 1.0, 2).is_err());
        assert!(ChannelParams::new(2.1, 4.0, 1.0, 1.0, 0).is_err());
        assert!(ChannelParams::new(2.1, 4.0, -1.0, 1.0, 1).is_err());
        assert!(ChannelParams::new(1.5, 2.0, 1.0, 1.0, 1).is_err());
        let mut ch = fig3_channel(2);
        ch.m_nlos = 2;
        assert!(ch.validate().is_err());
    }

    #[test]
    fn assoc_prob_values() {
        assert_eq!(assoc_prob(LinkClass::Los, 0.0, 100.0), 0.0);
        assert_eq!(assoc_prob(LinkClass::Nlos, 0.0, 100.0), 1.0);
        assert_eq!(assoc_prob(LinkClass::Los, 1e-5, 0.0), 0.0);
        let p = assoc_prob(LinkClass::Los, 1e-5, 100.0);
        assert!((p - (1.0 - (-0.1 * PI).exp())).abs() < 1e-15);
        assert!((p - 0.269_597_308_951_354_4).abs() < 1e-15);
    }

    #[test]
    fn serving_pdf_support_and_value() {
        let cfg = NetworkConfig::new(1e-5, 50.0, 100.0, 10.0, 1e-12, fig3_channel(3)).unwrap();
        assert_eq!(serving_dist_pdf(LinkClass::Los, 150.0, &cfg).unwrap(), 0.0);
        assert_eq!(serving_dist_pdf(LinkClass::Nlos, 50.0, &cfg).unwrap(), 0.0);
        let expected = 2.0 * PI * 1e-5 * 50.0 * (-PI * 1e-5 * 2500.0f64).exp() / (1.0 - (-0.1 * PI).exp());
        assert!((serving_dist_pdf(LinkClass::Los, 50.0, &cfg).unwrap() - expected).abs() < 1e-15);
        let empty = cfg.with_density(0.0);
        assert!(matches!(serving_dist_pdf(LinkClass::Los, 10.0, &empty), Err(Error::Degenerate(_))));
    }

    #[test]
    fn serving_pdf_normalizes() {
        let rule = QuadratureRule::gauss_legendre(64).unwrap();
        for &(lambda, big_r) in &[(1e-5, 100.0), (1e-6, 200.0), (3e-4, 50.0)] {
            let cfg = NetworkConfig::new(lambda, 50.0, big_r, 10.0, 0.0, fig3_channel(2)).unwrap();
            let los = quad_composite(|r| serving_dist_pdf(LinkClass::Los, r, &cfg).unwrap(), 0.0, big_r, 4, &rule);
            assert!((los - 1.0).abs() < 1e-8, "LoS {los}");
            // Map [R, ∞) onto [0, 1) with r = R + t/(1-t) scaled by the mean spacing.
            let scale = 1.0 / (PI * lambda).sqrt();
            let nlos = quad_composite(
                |t| {
                    let r = big_r + scale * t / (1.0 - t);
                    serving_dist_pdf(LinkClass::Nlos, r, &cfg).unwrap() * scale / ((1.0 - t) * (1.0 - t))
                },
                0.0,
                1.0,
                16,
                &rule,
            );
            assert!((nlos - 1.0).abs() < 1e-8, "NLoS {nlos}");
        }
    }

    #[test]
    fn radius_maps() {
        assert_eq!(los_radius_at(&LosRadiusMap::Constant { radius: 200.0 }, 17.0).unwrap(), 200.0);
        assert_eq!(los_radius_at(&LosRadiusMap::Affine { c0: 50.0, c1: 2.0 }, 75.0).unwrap(), 200.0);
        let table = LosRadiusMap::Table { knots: vec![(0.0, 50.0), (100.0, 250.0)] };
        assert_eq!(los_radius_at(&table, 50.0).unwrap(), 150.0);
        assert_eq!(los_radius_at(&table, 500.0).unwrap(), 250.0);
        let bad = LosRadiusMap::Table { knots: vec![(0.0, 50.0), (100.0, 20.0)] };
        assert!(matches!(los_radius_at(&bad, 10.0), Err(Error::Config(_))));
        assert!(los_radius_at(&table, -1.0).is_err());
    }

    #[test]
    fn noise_normalization() {
        let cfg = NetworkConfig::new(1e-6, 50.0, 200.0, 10.0, 1e-13, fig3_channel(3)).unwrap();
        assert!((cfg.normalized_noise() - 1e-14).abs() < 1e-28);
        assert!(NetworkConfig::new(1e-6, 50.0, 200.0, 0.0, 1e-13, fig3_channel(3)).is_err());
    }

    proptest! {
        #[test]
        fn assoc_probs_partition_unity(lambda in 0.0f64..1e-3, r in 0.0f64..2000.0) {
            let l = assoc_prob(LinkClass::Los, lambda, r);
            let n = assoc_prob(LinkClass::Nlos, lambda, r);
            prop_assert!((0.0..=1.0).contains(&l) && (0.0..=1.0).contains(&n));
            prop_assert!((l + n - 1.0).abs() < 1e-15);
        }

        #[test]
        fn path_loss_decreasing(d2 in 0.0f64..1e6, h in 1.0f64..500.0, dd in 1e-3f64..1e3) {
            let ch = fig3_channel(2);
            for class in [LinkClass::Los, LinkClass::Nlos] {
                let base = path_loss(d2, h, class, &ch).unwrap();
                prop_assert!(path_loss(d2 + dd, h, class, &ch).unwrap() < base);
                prop_assert!(path_loss(d2, h + dd, class, &ch).unwrap() < base);
            }
        }

        #[test]
        fn affine_and_table_monotone(h1 in 0.0f64..300.0, dh in 0.0f64..300.0) {
            let maps = [
                LosRadiusMap::Affine { c0: 10.0, c1: 4.0 },
                LosRadiusMap::Table { knots: vec![(10.0, 40.0), (60.0, 200.0), (200.0, 700.0)] },
            ];
            for m in &maps {
                prop_assert!(los_radius_at(m, h1 + dh).unwrap() >= los_radius_at(m, h1).unwrap());
            }
        }
    }
}
