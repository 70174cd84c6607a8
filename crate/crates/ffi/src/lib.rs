//! C ABI over `mpd-core`.
//!
//! Every function returns an [`MpdStatus`]; on failure the message is kept
//! per thread and read with [`mpd_last_error`]. Handles are opaque and owned
//! by the caller, who releases them with the matching `_free` function.
//! Panics are caught at the boundary and reported as `MPD_STATUS_PANIC`.

use mpd_core::cli::{build_model, run_experiment, BuiltModel, ExperimentConfig, ModelSpec};
use mpd_core::error::Error;
use mpd_core::integrators::{exact_transition_moments, Integrator, MomentumParams, VariantConfig};
use mpd_core::model::{toyhm_mle, ToyHM};
use mpd_core::state::{init_state, CloudInit, ParticleCloud, ThetaState};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Config = 4,
    Numerical = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpdAlgorithm {
    Pgd = 0,
    Mpd = 1,
    MpdNc = 2,
    ThetaOnly = 3,
    XOnly = 4,
}

/// Damping, inverse mass and step size of each component.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpdParams {
    pub gamma_theta: f64,
    pub eta_theta: f64,
    pub gamma_x: f64,
    pub eta_x: f64,
    pub h_theta: f64,
    pub h_x: f64,
}

/// A latent-variable model with its data.
pub struct MpdModel {
    inner: BuiltModel,
}

/// A particle system advancing under one algorithm.
pub struct MpdSampler {
    model: BuiltModel,
    state: ThetaState,
    cloud: ParticleCloud,
    integ: Integrator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(MpdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } => MpdStatus::DimensionMismatch,
            Error::Config(_) | Error::Json(_) | Error::Incompatible(_) => MpdStatus::Config,
            Error::Io(_) => MpdStatus::Io,
            Error::NotPositiveDefinite { .. } | Error::Degenerate(_) => MpdStatus::Numerical,
            _ => MpdStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MpdStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MpdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MpdStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
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
            MpdStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be null or point to `len` readable doubles.
unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or point to `len` writable doubles.
unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// # Safety
/// `p` must be null or a NUL-terminated string.
unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MpdStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

/// # Safety
/// `p` must be null or valid for writes.
unsafe fn put<T>(p: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

fn copy_out(src: &[f64], dst: &mut [f64], what: &str) -> Result<(), Failure> {
    if src.len() != dst.len() {
        return Err(Failure(
            MpdStatus::DimensionMismatch,
            format!("`{what}` needs {} elements, got {}", src.len(), dst.len()),
        ));
    }
    dst.copy_from_slice(src);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mpd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// always NUL-terminated when `len > 0`) and returns the full length including
/// the NUL, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mpd_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Closed-form maximum-likelihood estimate of ToyHM: the mean of `y`.
///
/// # Safety
/// `y` must point to `n` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpd_toyhm_mle(y: *const f64, n: usize, out: *mut f64) -> MpdStatus {
    guard(|| {
        let y = slice(y, n, "y")?;
        put(out, toyhm_mle(y)?, "out")
    })
}

/// # Safety
/// `y` must point to `n` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpd_toyhm_new(
    y: *const f64,
    n: usize,
    sigma2: f64,
    out: *mut *mut MpdModel,
) -> MpdStatus {
    guard(|| {
        let y = slice(y, n, "y")?.to_vec();
        let model = MpdModel {
            inner: BuiltModel::Toyhm(ToyHM::new(y, sigma2)?),
        };
        put(out, Box::into_raw(Box::new(model)), "out")
    })
}

/// Builds a model from the JSON `model` section of an experiment config.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mpd_model_from_json(
    json: *const c_char,
    out: *mut *mut MpdModel,
) -> MpdStatus {
    guard(|| {
        let text = string(json, "json")?;
        let spec: ModelSpec =
            serde_json::from_str(text).map_err(|e| Failure(MpdStatus::Config, e.to_string()))?;
        let model = MpdModel {
            inner: build_model(&spec)?,
        };
        put(out, Box::into_raw(Box::new(model)), "out")
    })
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpd_model_free(model: *mut MpdModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `dim_theta` and `dim_x` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpd_model_dims(
    model: *const MpdModel,
    dim_theta: *mut usize,
    dim_x: *mut usize,
) -> MpdStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?.inner.as_dyn();
        put(dim_theta, m.dim_theta(), "dim_theta")?;
        put(dim_x, m.dim_x(), "dim_x")
    })
}

/// `ℓ(θ, x) = log p_θ(y, x)`.
///
/// # Safety
/// `model` must be a live handle, `theta` and `x` must point to the given
/// number of doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpd_model_log_joint(
    model: *const MpdModel,
    theta: *const f64,
    n_theta: usize,
    x: *const f64,
    n_x: usize,
    out: *mut f64,
) -> MpdStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?.inner.as_dyn();
        let v = m.log_joint(slice(theta, n_theta, "theta")?, slice(x, n_x, "x")?)?;
        put(out, v, "out")
    })
}

/// `∇_θ ℓ` into `out`, which must hold exactly `dim_theta` doubles.
///
/// # Safety
/// As [`mpd_model_log_joint`], with `out` pointing to `n_out` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mpd_model_grad_theta(
    model: *const MpdModel,
    theta: *const f64,
    n_theta: usize,
    x: *const f64,
    n_x: usize,
    out: *mut f64,
    n_out: usize,
) -> MpdStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?.inner.as_dyn();
        let g = m.grad_theta(slice(theta, n_theta, "theta")?, slice(x, n_x, "x")?)?;
        copy_out(&g, slice_mut(out, n_out, "out")?, "out")
    })
}

/// `∇_x ℓ` into `out`, which must hold exactly `dim_x` doubles.
///
/// # Safety
/// As [`mpd_model_grad_theta`].
#[no_mangle]
pub unsafe extern "C" fn mpd_model_grad_x(
    model: *const MpdModel,
    theta: *const f64,
    n_theta: usize,
    x: *const f64,
    n_x: usize,
    out: *mut f64,
    n_out: usize,
) -> MpdStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?.inner.as_dyn();
        let g = m.grad_x(slice(theta, n_theta, "theta")?, slice(x, n_x, "x")?)?;
        copy_out(&g, slice_mut(out, n_out, "out")?, "out")
    })
}

/// Mean and covariance of one exact step of the scalar latent dynamics with
/// the gradient `grad` frozen, started from `(x0, u0)`.
///
/// # Safety
/// All output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpd_transition_moments(
    x0: f64,
    u0: f64,
    grad: f64,
    gamma: f64,
    eta: f64,
    h: f64,
    mean_x: *mut f64,
    mean_u: *mut f64,
    var_x: *mut f64,
    cov_ux: *mut f64,
    var_u: *mut f64,
) -> MpdStatus {
    guard(|| {
        let m = exact_transition_moments(&[x0], &[u0], &[grad], gamma, eta, h)?;
        put(mean_x, m.mean_x[0], "mean_x")?;
        put(mean_u, m.mean_u[0], "mean_u")?;
        put(var_x, m.sigma_xx, "var_x")?;
        put(cov_ux, m.sigma_ux, "cov_ux")?;
        put(var_u, m.sigma_uu, "var_u")
    })
}

fn variant(a: MpdAlgorithm) -> VariantConfig {
    match a {
        MpdAlgorithm::Pgd => VariantConfig::pgd(),
        MpdAlgorithm::Mpd => VariantConfig::mpd(),
        MpdAlgorithm::MpdNc => VariantConfig::nc(),
        MpdAlgorithm::ThetaOnly => VariantConfig::theta_only(),
        MpdAlgorithm::XOnly => VariantConfig::x_only(),
    }
}

/// Starts `particles` particles from `N(0, I)` with zero momenta. The model
/// is copied, so `model` may be freed afterwards. `theta0` may be null for
/// the model's default initial parameter.
///
/// # Safety
/// `model` must be a live handle, `params` readable, `theta0` null or
/// pointing to `n_theta0` doubles, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mpd_sampler_new(
    model: *const MpdModel,
    params: *const MpdParams,
    algorithm: MpdAlgorithm,
    particles: usize,
    theta0: *const f64,
    n_theta0: usize,
    seed: u64,
    out: *mut *mut MpdSampler,
) -> MpdStatus {
    guard(|| {
        let built = model.as_ref().ok_or_else(|| null("model"))?.inner.clone();
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let params = MomentumParams {
            gamma_theta: p.gamma_theta,
            eta_theta: p.eta_theta,
            gamma_x: p.gamma_x,
            eta_x: p.eta_x,
            h_theta: p.h_theta,
            h_x: p.h_x,
        };
        let theta0 = if theta0.is_null() {
            built.default_theta0(seed)
        } else {
            slice(theta0, n_theta0, "theta0")?.to_vec()
        };
        let integ = Integrator::new(params, variant(algorithm))?;
        let (state, cloud) = init_state(
            built.as_dyn(),
            particles,
            theta0,
            &CloudInit::standard_normal(),
            seed,
        )?;
        let sampler = MpdSampler {
            model: built,
            state,
            cloud,
            integ,
        };
        put(out, Box::into_raw(Box::new(sampler)), "out")
    })
}

/// # Safety
/// `sampler` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpd_sampler_free(sampler: *mut MpdSampler) {
    if !sampler.is_null() {
        drop(Box::from_raw(sampler));
    }
}

/// Advances `steps` iterations; fails with `MPD_STATUS_NUMERICAL` once the
/// state stops being finite.
///
/// # Safety
/// `sampler` must be a live handle not used concurrently.
#[no_mangle]
pub unsafe extern "C" fn mpd_sampler_step(sampler: *mut MpdSampler, steps: u64) -> MpdStatus {
    guard(|| {
        let s = sampler.as_mut().ok_or_else(|| null("sampler"))?;
        for k in 0..steps {
            s.integ.step(s.model.as_dyn(), &mut s.state, &mut s.cloud)?;
            if !s.state.is_finite() || !s.cloud.is_finite() {
                return Err(Failure(
                    MpdStatus::Numerical,
                    format!("state not finite after step {}", k + 1),
                ));
            }
        }
        Ok(())
    })
}

/// Copies `θ` into `out`, which must hold exactly `dim_theta` doubles.
///
/// # Safety
/// `sampler` must be a live handle and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mpd_sampler_theta(
    sampler: *const MpdSampler,
    out: *mut f64,
    len: usize,
) -> MpdStatus {
    guard(|| {
        let s = sampler.as_ref().ok_or_else(|| null("sampler"))?;
        copy_out(&s.state.theta, slice_mut(out, len, "out")?, "out")
    })
}

/// Copies the particle positions, row-major `particles × dim_x`, into `out`.
///
/// # Safety
/// `sampler` must be a live handle and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mpd_sampler_particles(
    sampler: *const MpdSampler,
    out: *mut f64,
    len: usize,
) -> MpdStatus {
    guard(|| {
        let s = sampler.as_ref().ok_or_else(|| null("sampler"))?;
        copy_out(&s.cloud.x, slice_mut(out, len, "out")?, "out")
    })
}

/// Runs an experiment config given as JSON and returns its summary as a JSON
/// string to be released with [`mpd_string_free`]. When `out_dir` is not
/// null the trace and summary files are written there too.
///
/// # Safety
/// `config_json` must be a NUL-terminated string, `out_dir` null or one, and
/// `summary_json` writable.
#[no_mangle]
pub unsafe extern "C" fn mpd_run_json(
    config_json: *const c_char,
    out_dir: *const c_char,
    summary_json: *mut *mut c_char,
) -> MpdStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_json(string(config_json, "config_json")?)?;
        let out = run_experiment(&cfg)?;
        if !out_dir.is_null() {
            mpd_core::cli::write_run(std::path::Path::new(string(out_dir, "out_dir")?), &out)?;
        }
        let text = serde_json::to_string(&out.summary).map_err(Error::from)?;
        let c = CString::new(text).expect("JSON has no NULs");
        put(summary_json, c.into_raw(), "summary_json")
    })
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
