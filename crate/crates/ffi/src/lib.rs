//! C ABI over the `uavcov` library.
//!
//! Every function returns a [`UavcovStatus`]; on failure the message is kept
//! in a thread-local slot readable with [`uavcov_last_error`]. Configurations
//! are opaque handles created by `uavcov_config_*` and released with
//! [`uavcov_config_free`]. All quantities are SI: densities in m⁻², powers in
//! W, gains and thresholds linear.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use uavcov::analytic::CoverageKernel;
use uavcov::model::{ChannelParams, NetworkConfig};
use uavcov::optimize::lambda_lower_bound;
use uavcov::sim::{estimate_coverage, LosModel, Metric};
use uavcov::Error;

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UavcovStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    NoRoot = 4,
    Panic = 5,
}

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UavcovMetric {
    Sir = 0,
    Sinr = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UavcovCoverage {
    pub total: f64,
    pub los_term: f64,
    pub nlos_term: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UavcovMcEstimate {
    pub coverage: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Opaque network configuration.
pub struct UavcovConfig {
    inner: NetworkConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> UavcovStatus {
    match e {
        Error::Config(_) | Error::Domain { .. } => UavcovStatus::InvalidArgument,
        Error::NoRoot(_) => UavcovStatus::NoRoot,
        _ => UavcovStatus::Numerical,
    }
}

type Failure = (UavcovStatus, String);

fn fail(e: Error) -> Failure {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> Failure {
    (UavcovStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `body`, converting errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), Failure>>(body: F) -> UavcovStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            UavcovStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            UavcovStatus::Panic
        }
    }
}

unsafe fn config_ref<'a>(cfg: *const UavcovConfig) -> Result<&'a UavcovConfig, Failure> {
    cfg.as_ref().ok_or_else(|| null("config"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Creates a configuration. On success `*out` owns a new handle.
///
/// # Safety
/// `out` must be NULL or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn uavcov_config_new(
    density: f64,
    altitude: f64,
    los_radius: f64,
    tx_power: f64,
    noise_power: f64,
    alpha_los: f64,
    alpha_nlos: f64,
    a_los: f64,
    a_nlos: f64,
    m_los: u32,
    out: *mut *mut UavcovConfig,
) -> UavcovStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let ch = ChannelParams::new(alpha_los, alpha_nlos, a_los, a_nlos, m_los).map_err(fail)?;
        let inner = NetworkConfig::new(density, altitude, los_radius, tx_power, noise_power, ch).map_err(fail)?;
        out.write(Box::into_raw(Box::new(UavcovConfig { inner })));
        Ok(())
    })
}

/// Reference network: 1 GBS/km², 50 m altitude, 200 m LoS radius, `M_L = 3`,
/// 40 dBm transmit power, −97 dBm noise, path-loss exponents 2.1/4 and
/// reference gains −41.1/−32.9 dB.
#[no_mangle]
pub extern "C" fn uavcov_config_default() -> *mut UavcovConfig {
    let ch = ChannelParams::new(2.1, 4.0, 10f64.powf(-4.11), 10f64.powf(-3.29), 3).expect("valid channel");
    let inner = NetworkConfig::new(1e-6, 50.0, 200.0, 10.0, 10f64.powf(-12.7), ch).expect("valid network");
    Box::into_raw(Box::new(UavcovConfig { inner }))
}

/// # Safety
/// `cfg` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uavcov_config_free(cfg: *mut UavcovConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uavcov_config_set_density(cfg: *mut UavcovConfig, density: f64) -> UavcovStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("config"))?;
        let updated = cfg.inner.with_density(density);
        updated.validate().map_err(fail)?;
        cfg.inner = updated;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn uavcov_config_get_density(cfg: *const UavcovConfig, out: *mut f64) -> UavcovStatus {
    guard(|| {
        let cfg = config_ref(cfg)?;
        write_out(out, cfg.inner.density)
    })
}

/// SIR coverage probability at linear threshold `tau`.
///
/// # Safety
/// `cfg` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn uavcov_coverage(
    cfg: *const UavcovConfig,
    tau: f64,
    quad_order: u32,
    out: *mut UavcovCoverage,
) -> UavcovStatus {
    guard(|| {
        let cfg = config_ref(cfg)?;
        let r = CoverageKernel::new(tau, &cfg.inner, quad_order as usize).map_err(fail)?.evaluate(cfg.inner.density);
        write_out(out, UavcovCoverage { total: r.total, los_term: r.los_term, nlos_term: r.nlos_term })
    })
}

/// Lower bound on the coverage-maximizing density (m⁻²).
///
/// # Safety
/// `cfg` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn uavcov_lambda_lower_bound(
    cfg: *const UavcovConfig,
    tau: f64,
    quad_order: u32,
    out: *mut f64,
) -> UavcovStatus {
    guard(|| {
        let cfg = config_ref(cfg)?;
        let opt = lambda_lower_bound(tau, &cfg.inner, quad_order as usize).map_err(fail)?;
        write_out(out, opt.lambda_lb)
    })
}

/// Monte Carlo coverage under the LoS ball model. `metric` is a
/// [`UavcovMetric`] value.
///
/// # Safety
/// `cfg` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn uavcov_simulate(
    cfg: *const UavcovConfig,
    tau: f64,
    trials: u64,
    seed: u64,
    metric: i32,
    out: *mut UavcovMcEstimate,
) -> UavcovStatus {
    guard(|| {
        let cfg = config_ref(cfg)?;
        let metric = match metric {
            m if m == UavcovMetric::Sir as i32 => Metric::Sir,
            m if m == UavcovMetric::Sinr as i32 => Metric::Sinr,
            other => return Err((UavcovStatus::InvalidArgument, format!("unknown metric {other}"))),
        };
        let trials = usize::try_from(trials).map_err(|_| (UavcovStatus::InvalidArgument, "too many trials".into()))?;
        let model = LosModel::for_config(&cfg.inner);
        let est = estimate_coverage(&cfg.inner, &model, &[tau], trials, seed, metric).map_err(fail)?;
        let e = est[0];
        write_out(out, UavcovMcEstimate { coverage: e.coverage, stderr: e.stderr, trials: e.trials as u64, seed })
    })
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length including
/// the terminator, or 0 when there is no error.
///
/// # Safety
/// `buf` must be NULL or valid for writing `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn uavcov_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let slot = e.borrow();
        let Some(msg) = slot.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn uavcov_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
