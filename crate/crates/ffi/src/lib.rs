//! C interface to fbkan models.
//!
//! Models are opaque handles created by one of the `fbkan_model_*`
//! constructors and released with [`fbkan_model_free`]. Every fallible call
//! returns an [`FbkanStatus`]; on failure the message is kept per thread and
//! can be copied out with [`fbkan_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use fbkan::decomposition::FbkanModel as Model;
use fbkan::diff::ModelTape;
use fbkan::harness::run::{build_model, load_model, run, save_model, RunOptions};
use fbkan::harness::{resolve, RunConfig};
use fbkan::FbkanError;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbkanStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    NumericalFailure = 4,
    CoverageViolation = 5,
    Config = 6,
    Io = 7,
    Serialization = 8,
    Panic = 9,
}

/// Opaque model handle. Holds its own evaluation buffers, so one handle
/// must not be used from two threads at once.
pub struct FbkanModel {
    model: Model,
    tape: ModelTape,
}

impl FbkanModel {
    fn new(model: Model) -> Self {
        FbkanModel {
            model,
            tape: ModelTape::new(),
        }
    }
}

/// Outcome of [`fbkan_train`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FbkanRunResult {
    pub rel_l2: f64,
    pub initial_rel_l2: f64,
    pub param_count: usize,
    pub iterations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', "\\0")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(FbkanStatus, String);

impl From<FbkanError> for Failure {
    fn from(e: FbkanError) -> Self {
        let status = match e {
            FbkanError::InvalidArgument(_) => FbkanStatus::InvalidArgument,
            FbkanError::NumericalFailure { .. } => FbkanStatus::NumericalFailure,
            FbkanError::CoverageViolation(_) => FbkanStatus::CoverageViolation,
            FbkanError::Config(_) => FbkanStatus::Config,
            FbkanError::Io(_) => FbkanStatus::Io,
            FbkanError::Serialization(_) => FbkanStatus::Serialization,
        };
        Failure(status, e.to_string())
    }
}

type CallResult = std::result::Result<(), Failure>;

fn guard(f: impl FnOnce() -> CallResult) -> FbkanStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure(FbkanStatus::Panic, format!("panic: {msg}")))
    });
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FbkanStatus::Ok
        }
        Err(Failure(status, msg)) => {
            set_last_error(msg);
            status
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(FbkanStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> std::result::Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(FbkanStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn handle<'a>(p: *mut FbkanModel) -> std::result::Result<&'a mut FbkanModel, Failure> {
    p.as_mut().ok_or_else(|| null("model"))
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> std::result::Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, what: &str) -> std::result::Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

fn invalid(msg: String) -> Failure {
    Failure(FbkanStatus::InvalidArgument, msg)
}

unsafe fn emit(out: *mut *mut FbkanModel, model: Model) -> CallResult {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(FbkanModel::new(model)));
    Ok(())
}

fn fresh_model(cfg: &RunConfig) -> std::result::Result<Model, Failure> {
    cfg.validate()?;
    let problem = cfg.problem_spec()?;
    Ok(build_model(cfg, &problem)?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fbkan_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length excluding
/// the NUL, or 0 when the last call succeeded. `buf` may be NULL to query
/// the length.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fbkan_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Fresh (untrained) model for a preset name such as `helmholtz-fbkan1-L4`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fbkan_model_from_preset(name: *const c_char, seed: u64, out: *mut *mut FbkanModel) -> FbkanStatus {
    guard(|| {
        let mut cfg = resolve(c_str(name, "name")?)?;
        cfg.seed = seed;
        let model = fresh_model(&cfg)?;
        emit(out, model)
    })
}

/// Fresh model (or the configured checkpoint) for a TOML run configuration.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fbkan_model_from_config(config_toml: *const c_char, out: *mut *mut FbkanModel) -> FbkanStatus {
    guard(|| {
        let cfg = RunConfig::from_toml(c_str(config_toml, "config_toml")?)?;
        let model = fresh_model(&cfg)?;
        emit(out, model)
    })
}

/// Load a checkpoint written by a training run.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fbkan_model_load(path: *const c_char, out: *mut *mut FbkanModel) -> FbkanStatus {
    guard(|| {
        let model = load_model(Path::new(c_str(path, "path")?))?;
        emit(out, model)
    })
}

/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fbkan_model_save(model: *mut FbkanModel, path: *const c_char) -> FbkanStatus {
    guard(|| {
        let h = handle(model)?;
        save_model(&h.model, Path::new(c_str(path, "path")?))?;
        Ok(())
    })
}

/// Release a handle. NULL is ignored.
///
/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fbkan_model_free(model: *mut FbkanModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Input dimension, or 0 for a NULL handle.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fbkan_model_input_dim(model: *const FbkanModel) -> usize {
    model.as_ref().map_or(0, |h| h.model.input_dim())
}

/// Number of trainable parameters, or 0 for a NULL handle.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fbkan_model_param_count(model: *const FbkanModel) -> usize {
    model.as_ref().map_or(0, |h| h.model.param_count())
}

/// Copy the flat parameter vector into `out` (`len` must equal the
/// parameter count).
///
/// # Safety
/// `model` must be a live handle and `out` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fbkan_model_get_params(model: *mut FbkanModel, out: *mut f64, len: usize) -> FbkanStatus {
    guard(|| {
        let h = handle(model)?;
        let n = h.model.param_count();
        if len != n {
            return Err(invalid(format!("params buffer has {len} slots, model has {n} parameters")));
        }
        output(out, len, "out")?.copy_from_slice(&h.model.params_flat());
        Ok(())
    })
}

/// Replace the flat parameter vector.
///
/// # Safety
/// `model` must be a live handle and `params` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fbkan_model_set_params(model: *mut FbkanModel, params: *const f64, len: usize) -> FbkanStatus {
    guard(|| {
        let h = handle(model)?;
        h.model.set_params_flat(input(params, len, "params")?)?;
        Ok(())
    })
}

/// Evaluate the model at `n_points` row-major points of dimension `dim`,
/// writing one value per point to `out`.
///
/// # Safety
/// `model` must be a live handle, `points` point to `n_points * dim`
/// doubles and `out` to `n_points` doubles.
#[no_mangle]
pub unsafe extern "C" fn fbkan_model_predict(
    model: *mut FbkanModel,
    points: *const f64,
    n_points: usize,
    dim: usize,
    out: *mut f64,
) -> FbkanStatus {
    guard(|| {
        let h = handle(model)?;
        let d = h.model.input_dim();
        if dim != d {
            return Err(invalid(format!("model expects {d} inputs, got dim = {dim}")));
        }
        let total = n_points
            .checked_mul(dim)
            .ok_or_else(|| invalid("n_points * dim overflows".into()))?;
        let xs = input(points, total, "points")?;
        let out = output(out, n_points, "out")?;
        for (x, o) in xs.chunks_exact(dim).zip(out.iter_mut()) {
            *o = h.tape.forward(&h.model, x, 0, false)?.value;
        }
        Ok(())
    })
}

/// Value, gradient and diagonal second derivatives at one point. `first`
/// and `second_diag` hold `dim` doubles each and may be NULL; the
/// derivative order is the highest one requested.
///
/// # Safety
/// `model` must be a live handle, `x` point to `dim` doubles, `value` be
/// valid, and `first` / `second_diag` be NULL or point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn fbkan_model_jet(
    model: *mut FbkanModel,
    x: *const f64,
    dim: usize,
    value: *mut f64,
    first: *mut f64,
    second_diag: *mut f64,
) -> FbkanStatus {
    guard(|| {
        let h = handle(model)?;
        if value.is_null() {
            return Err(null("value"));
        }
        let x = input(x, dim, "x")?;
        let order = if !second_diag.is_null() {
            2
        } else if !first.is_null() {
            1
        } else {
            0
        };
        let jet = h.tape.forward(&h.model, x, order, false)?;
        *value = jet.value;
        if !first.is_null() {
            output(first, dim, "first")?.copy_from_slice(&jet.first);
        }
        if !second_diag.is_null() {
            output(second_diag, dim, "second_diag")?.copy_from_slice(&jet.second_diag);
        }
        Ok(())
    })
}

/// Train a configuration (TOML text, or `preset:<name>`) and write its
/// artifacts into `out_dir`. `result` may be NULL.
///
/// # Safety
/// `config` and `out_dir` must be NUL-terminated strings; `result` must be
/// NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn fbkan_train(config: *const c_char, out_dir: *const c_char, result: *mut FbkanRunResult) -> FbkanStatus {
    guard(|| {
        let spec = c_str(config, "config")?;
        let cfg = match spec.strip_prefix("preset:") {
            Some(name) => resolve(name)?,
            None => RunConfig::from_toml(spec)?,
        };
        let s = run(&cfg, Path::new(c_str(out_dir, "out_dir")?), RunOptions::default())?;
        if let Some(r) = result.as_mut() {
            *r = FbkanRunResult {
                rel_l2: s.rel_l2,
                initial_rel_l2: s.initial_rel_l2,
                param_count: s.param_count,
                iterations: s.iterations,
            };
        }
        Ok(())
    })
}
