//! Run configuration: a flat TOML file with unit-suffixed keys, overridden
//! by command-line flags.

use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{los_radius_at, ChannelParams, LosRadiusMap, NetworkConfig};
use crate::units::{db_to_linear, dbm_to_watts, per_km2_to_per_m2};

/// Every parameter a run can set. All fields are optional so that file and
/// flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// GBS density (km⁻²).
    #[arg(long)]
    pub density_per_km2: Option<f64>,
    /// UAV altitude (m).
    #[arg(long)]
    pub altitude_m: Option<f64>,
    /// Constant LoS radius (m).
    #[arg(long, conflicts_with = "los_radius_per_m_altitude")]
    pub los_radius_m: Option<f64>,
    /// Affine LoS radius `R = intercept + slope·h`: slope.
    #[arg(long)]
    pub los_radius_per_m_altitude: Option<f64>,
    /// Affine LoS radius intercept (m).
    #[arg(long, requires = "los_radius_per_m_altitude")]
    pub los_radius_intercept_m: Option<f64>,
    #[arg(long)]
    pub tx_power_dbm: Option<f64>,
    #[arg(long)]
    pub noise_power_dbm: Option<f64>,
    #[arg(long)]
    pub alpha_los: Option<f64>,
    #[arg(long)]
    pub alpha_nlos: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a_los_db: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a_nlos_db: Option<f64>,
    /// Nakagami parameter of LoS links.
    #[arg(long)]
    pub m_los: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    pub sidelobe_gain_db: Option<f64>,
    /// Logistic LoS model parameter `a`.
    #[arg(long)]
    pub logistic_a: Option<f64>,
    /// Logistic LoS model parameter `b`.
    #[arg(long)]
    pub logistic_b: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub quad_order: Option<usize>,
    /// Threshold sweep `lo:hi:step` in dB, or a single value.
    #[arg(long, allow_hyphen_values = true)]
    pub tau_db: Option<String>,
    /// Density grid `lo:hi:points[,log]` in km⁻².
    #[arg(long)]
    pub lambda_per_km2: Option<String>,
}

impl Params {
    /// Parameters of the reference desk-scale network.
    pub fn defaults() -> Self {
        Self {
            density_per_km2: Some(1.0),
            altitude_m: Some(50.0),
            los_radius_m: None,
            los_radius_per_m_altitude: None,
            los_radius_intercept_m: None,
            tx_power_dbm: Some(40.0),
            noise_power_dbm: Some(-97.0),
            alpha_los: Some(2.1),
            alpha_nlos: Some(4.0),
            a_los_db: Some(-41.1),
            a_nlos_db: Some(-32.9),
            m_los: Some(3),
            sidelobe_gain_db: Some(0.0),
            logistic_a: Some(9.61),
            logistic_b: Some(0.16),
            seed: Some(1),
            trials: Some(100_000),
            quad_order: Some(64),
            tau_db: None,
            lambda_per_km2: Some("0.01:100:60,log".into()),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: Params) -> Params {
        // A radius given at this layer replaces any radius rule below it.
        let radius_here = self.los_radius_m.is_some() || self.los_radius_per_m_altitude.is_some();
        let (r, slope, icpt) = if radius_here {
            (self.los_radius_m, self.los_radius_per_m_altitude, self.los_radius_intercept_m)
        } else {
            (base.los_radius_m, base.los_radius_per_m_altitude, base.los_radius_intercept_m)
        };
        Params {
            density_per_km2: self.density_per_km2.or(base.density_per_km2),
            altitude_m: self.altitude_m.or(base.altitude_m),
            los_radius_m: r,
            los_radius_per_m_altitude: slope,
            los_radius_intercept_m: icpt,
            tx_power_dbm: self.tx_power_dbm.or(base.tx_power_dbm),
            noise_power_dbm: self.noise_power_dbm.or(base.noise_power_dbm),
            alpha_los: self.alpha_los.or(base.alpha_los),
            alpha_nlos: self.alpha_nlos.or(base.alpha_nlos),
            a_los_db: self.a_los_db.or(base.a_los_db),
            a_nlos_db: self.a_nlos_db.or(base.a_nlos_db),
            m_los: self.m_los.or(base.m_los),
            sidelobe_gain_db: self.sidelobe_gain_db.or(base.sidelobe_gain_db),
            logistic_a: self.logistic_a.or(base.logistic_a),
            logistic_b: self.logistic_b.or(base.logistic_b),
            seed: self.seed.or(base.seed),
            trials: self.trials.or(base.trials),
            quad_order: self.quad_order.or(base.quad_order),
            tau_db: self.tau_db.or(base.tau_db),
            lambda_per_km2: self.lambda_per_km2.or(base.lambda_per_km2),
        }
    }

    /// Layers flags over an optional file over the defaults. `default_tau_db`
    /// applies when neither sets `tau_db`.
    pub fn resolve(flags: Params, file: Option<&Path>, default_tau_db: &str) -> Result<RunConfig> {
        let file_params = match file {
            Some(p) => Params::from_file(p)?,
            None => Params::default(),
        };
        let mut merged = flags.over(file_params).over(Params::defaults());
        merged.tau_db.get_or_insert_with(|| default_tau_db.to_string());
        merged.into_run_config()
    }

    fn into_run_config(self) -> Result<RunConfig> {
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| Error::Config(format!("missing `{key}`")));
        let radius_map = match (self.los_radius_m, self.los_radius_per_m_altitude) {
            (Some(r), _) => LosRadiusMap::Constant { radius: r },
            (None, Some(c1)) => LosRadiusMap::Affine { c0: self.los_radius_intercept_m.unwrap_or(0.0), c1 },
            (None, None) => LosRadiusMap::Constant { radius: 200.0 },
        };
        radius_map.validate()?;
        let altitude = need(self.altitude_m, "altitude_m")?;
        let channel = ChannelParams::new(
            need(self.alpha_los, "alpha_los")?,
            need(self.alpha_nlos, "alpha_nlos")?,
            db_to_linear(need(self.a_los_db, "a_los_db")?),
            db_to_linear(need(self.a_nlos_db, "a_nlos_db")?),
            self.m_los.ok_or_else(|| Error::Config("missing `m_los`".into()))?,
        )?
        .with_sidelobe_gain(db_to_linear(need(self.sidelobe_gain_db, "sidelobe_gain_db")?))?;
        let network = NetworkConfig::new(
            per_km2_to_per_m2(need(self.density_per_km2, "density_per_km2")?),
            altitude,
            los_radius_at(&radius_map, altitude)?,
            dbm_to_watts(need(self.tx_power_dbm, "tx_power_dbm")?),
            dbm_to_watts(need(self.noise_power_dbm, "noise_power_dbm")?),
            channel,
        )?;
        let quad_order = self.quad_order.unwrap_or(64);
        if !(2..=1024).contains(&quad_order) {
            return Err(Error::Config(format!("quad_order {quad_order} outside 2..=1024")));
        }
        let trials = self.trials.unwrap_or(100_000);
        if trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(RunConfig {
            network,
            radius_map,
            logistic: (need(self.logistic_a, "logistic_a")?, need(self.logistic_b, "logistic_b")?),
            seed: self.seed.unwrap_or(1),
            trials,
            quad_order,
            tau_db: parse_tau_sweep(self.tau_db.as_deref().unwrap_or("0"))?,
            lambda_per_km2: parse_density_grid(self.lambda_per_km2.as_deref().unwrap_or("0.01:100:60,log"))?,
        })
    }
}

/// Fully resolved run in SI units, except for the user-facing sweeps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub radius_map: LosRadiusMap,
    pub logistic: (f64, f64),
    pub seed: u64,
    pub trials: usize,
    pub quad_order: usize,
    pub tau_db: Vec<f64>,
    pub lambda_per_km2: DensitySweep,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensitySweep {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub log: bool,
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Config(format!("{what}: `{s}` is not a number")))
}

/// `lo:hi:step` (inclusive) or a single value.
pub fn parse_tau_sweep(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [one] => Ok(vec![parse_f64(one, "tau_db")?]),
        [lo, hi, step] => {
            let (lo, hi, step) = (parse_f64(lo, "tau_db")?, parse_f64(hi, "tau_db")?, parse_f64(step, "tau_db")?);
            if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(format!("tau_db sweep `{spec}` needs lo <= hi and step > 0")));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|k| lo + k as f64 * step).collect())
        }
        _ => Err(Error::Config(format!("tau_db `{spec}` must be `lo:hi:step` or a single value"))),
    }
}

/// `lo:hi:points` with an optional `,log` suffix.
pub fn parse_density_grid(spec: &str) -> Result<DensitySweep> {
    let (body, log) = match spec.split_once(',') {
        Some((b, "log")) => (b, true),
        Some((b, "lin")) => (b, false),
        Some(_) => return Err(Error::Config(format!("lambda_per_km2 `{spec}`: suffix must be `,log` or `,lin`"))),
        None => (spec, false),
    };
    let parts: Vec<&str> = body.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(Error::Config(format!("lambda_per_km2 `{spec}` must be `lo:hi:points[,log]`")));
    };
    let lo = parse_f64(lo, "lambda_per_km2")?;
    let hi = parse_f64(hi, "lambda_per_km2")?;
    let points: usize =
        n.trim().parse().map_err(|_| Error::Config(format!("lambda_per_km2: `{n}` is not a point count")))?;
    if points == 0 || !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
        return Err(Error::Config(format!("lambda_per_km2 `{spec}` needs 0 < lo <= hi and points >= 1")));
    }
    Ok(DensitySweep { lo, hi, points, log })
}
