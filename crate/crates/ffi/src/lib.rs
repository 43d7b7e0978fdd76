//! C interface to `fiberqed`.
//!
//! Objects cross the boundary as opaque handles created by `fq_*_new` or
//! `fq_*_load` and released with the matching `fq_*_free`. Every fallible
//! call returns an [`FqStatus`]; on failure the message is available from
//! [`fq_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fiberqed::cli::force_model;
use fiberqed::config::{parse_config, RunConfig};
use fiberqed::forces::ForceModel;
use fiberqed::langevin::{simulate_trajectory, trajectory_rng, trapping_time, AtomInField, Trajectory};
use fiberqed::modes::ModeSuperposition;
use fiberqed::Error;
use nalgebra::Vector3;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Config = 3,
    Io = 4,
    Numerical = 5,
    OutOfRange = 6,
    Panic = 7,
}

impl From<&Error> for FqStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::ModeTable { .. } | Error::Containment { .. } => FqStatus::InvalidInput,
            Error::Config(_) => FqStatus::Config,
            Error::Io { .. } => FqStatus::Io,
            Error::Quadrature { .. } | Error::DivergentLoss | Error::NotPsd { .. } | Error::NonFiniteForce { .. } => FqStatus::Numerical,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: FqStatus, msg: impl Into<String>) -> FqStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> FqStatus {
    fail(FqStatus::from(&e), e.to_string())
}

fn guard(f: impl FnOnce() -> FqStatus) -> FqStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(FqStatus::Panic, "internal panic"),
    }
}

/// Message of the last failed call on this thread, or NULL.
/// The pointer stays valid until the next `fq_*` call on this thread.
#[no_mangle]
pub extern "C" fn fq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parsed and validated run configuration.
pub struct FqConfig {
    inner: RunConfig,
}

/// Force model built from a configuration, with the atomic mass and integrator settings.
pub struct FqModel {
    model: ForceModel,
    config: RunConfig,
}

/// Recorded trajectory.
pub struct FqTrajectory {
    inner: Trajectory,
}

/// Load a TOML configuration from `path`.
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fq_config_load(path: *const c_char, out: *mut *mut FqConfig) -> FqStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(FqStatus::NullPointer, "null argument");
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(p) => p,
            Err(_) => return fail(FqStatus::InvalidInput, "path is not UTF-8"),
        };
        match parse_config(path) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FqConfig { inner }));
                FqStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// `config` must come from [`fq_config_load`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn fq_config_free(config: *mut FqConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Override the integrator seed.
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fq_config_set_seed(config: *mut FqConfig, seed: u64) -> FqStatus {
    guard(|| match config.as_mut() {
        Some(c) => {
            c.inner.integrator.seed = seed;
            FqStatus::Ok
        }
        None => fail(FqStatus::NullPointer, "null config"),
    })
}

/// Build the force model of `config`. The configuration is copied.
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fq_model_new(config: *const FqConfig, out: *mut *mut FqModel) -> FqStatus {
    guard(|| {
        let (Some(c), false) = (config.as_ref(), out.is_null()) else {
            return fail(FqStatus::NullPointer, "null argument");
        };
        match force_model(&c.inner) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(FqModel {
                    model,
                    config: c.inner.clone(),
                }));
                FqStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// `model` must come from [`fq_model_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn fq_model_free(model: *mut FqModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn vec3(p: *const f64) -> Vector3<f64> {
    Vector3::new(*p, *p.add(1), *p.add(2))
}

/// Mean force including friction at position `r[3]` and velocity `v[3]`, into `force[3]`.
/// All pointers must be valid; `r`, `v` and `force` must hold three doubles.
#[no_mangle]
pub unsafe extern "C" fn fq_model_force(model: *const FqModel, r: *const f64, v: *const f64, force: *mut f64) -> FqStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(FqStatus::NullPointer, "null model");
        };
        if r.is_null() || v.is_null() || force.is_null() {
            return fail(FqStatus::NullPointer, "null vector");
        }
        match m.model.sample(&vec3(r), &vec3(v)) {
            Ok(s) => {
                let f = s.mean + s.friction_force;
                ptr::copy_nonoverlapping(f.as_ptr(), force, 3);
                FqStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Momentum diffusion tensor at `r[3]`, row-major into `d[9]`.
/// All pointers must be valid; `r` holds three doubles and `d` nine.
#[no_mangle]
pub unsafe extern "C" fn fq_model_diffusion(model: *const FqModel, r: *const f64, d: *mut f64) -> FqStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(FqStatus::NullPointer, "null model");
        };
        if r.is_null() || d.is_null() {
            return fail(FqStatus::NullPointer, "null vector");
        }
        match m.model.sample(&vec3(r), &Vector3::zeros()) {
            Ok(s) => {
                for i in 0..3 {
                    for j in 0..3 {
                        *d.add(3 * i + j) = s.diffusion[(i, j)];
                    }
                }
                FqStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Value and transverse gradient of `HG_{l,m}` with waist `w0` at `(x, y)`.
/// `value` must be valid and `gradient` must hold two doubles.
#[no_mangle]
pub unsafe extern "C" fn fq_hermite_gaussian(l: u32, m: u32, w0: f64, x: f64, y: f64, value: *mut f64, gradient: *mut f64) -> FqStatus {
    guard(|| {
        if value.is_null() || gradient.is_null() {
            return fail(FqStatus::NullPointer, "null output");
        }
        match ModeSuperposition::hermite(l, m, w0) {
            Ok(mode) => {
                let s = mode.sample(x, y);
                *value = s.value;
                *gradient = s.gradient[0];
                *gradient.add(1) = s.gradient[1];
                FqStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Integrate one trajectory with the model's integrator settings and `seed`.
/// A non-finite force yields `Numerical` and still stores the partial trajectory.
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fq_simulate(model: *const FqModel, seed: u64, out: *mut *mut FqTrajectory) -> FqStatus {
    guard(|| {
        let (Some(m), false) = (model.as_ref(), out.is_null()) else {
            return fail(FqStatus::NullPointer, "null argument");
        };
        let field = AtomInField {
            model: &m.model,
            mass: m.config.atom.mass,
        };
        let mut cfg = m.config.integrator.clone();
        cfg.seed = seed;
        match simulate_trajectory(&field, &cfg, &mut trajectory_rng(seed, 0)) {
            Ok(inner) => {
                let failure = inner.failure.clone();
                *out = Box::into_raw(Box::new(FqTrajectory { inner }));
                match failure {
                    Some(f) => fail(FqStatus::Numerical, f),
                    None => FqStatus::Ok,
                }
            }
            Err(e) => from_error(e),
        }
    })
}

/// `traj` must come from [`fq_simulate`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn fq_trajectory_free(traj: *mut FqTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of recorded samples; 0 for NULL.
/// `traj` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn fq_trajectory_len(traj: *const FqTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.samples.len())
}

/// Sample `index` as `t, x, y, z, vx, vy, vz` into `row[7]`.
/// `traj` must be a live handle and `row` must hold seven doubles.
#[no_mangle]
pub unsafe extern "C" fn fq_trajectory_sample(traj: *const FqTrajectory, index: usize, row: *mut f64) -> FqStatus {
    guard(|| {
        let Some(t) = traj.as_ref() else {
            return fail(FqStatus::NullPointer, "null trajectory");
        };
        if row.is_null() {
            return fail(FqStatus::NullPointer, "null row");
        }
        let Some(s) = t.inner.samples.get(index) else {
            return fail(FqStatus::OutOfRange, format!("sample {index} of {}", t.inner.samples.len()));
        };
        let values = [s.t, s.r.x, s.r.y, s.r.z, s.v.x, s.v.y, s.v.z];
        ptr::copy_nonoverlapping(values.as_ptr(), row, 7);
        FqStatus::Ok
    })
}

/// Trapping time and whether it is censored at `t_max`.
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fq_trajectory_trapping_time(traj: *const FqTrajectory, time: *mut f64, censored: *mut bool) -> FqStatus {
    guard(|| {
        let Some(t) = traj.as_ref() else {
            return fail(FqStatus::NullPointer, "null trajectory");
        };
        if time.is_null() || censored.is_null() {
            return fail(FqStatus::NullPointer, "null output");
        }
        let (tt, c) = trapping_time(&t.inner);
        *time = tt;
        *censored = c;
        FqStatus::Ok
    })
}
