//! Conversions between user units and SI.

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

/// GBS per km² to GBS per m².
pub fn per_km2_to_per_m2(x: f64) -> f64 {
    x * 1e-6
}

pub fn per_m2_to_per_km2(x: f64) -> f64 {
    x * 1e6
}
