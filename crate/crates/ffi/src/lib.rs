//! C ABI over the nearopt pipeline.
//!
//! Every fallible call returns a [`NearoptStatus`]; on failure the message
//! is available from [`nearopt_last_error`] on the same thread. Objects are
//! opaque handles released with their matching `_free` function. Strings
//! returned through `char **` are owned by the caller and released with
//! [`nearopt_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nearopt::maa::MaaResult;
use nearopt::model::{annualized_cost, annuity, ModelError, TechnologyParams};
use nearopt::pipeline::{Pipeline, PipelineError};
use nearopt::sampler::{read_samples, sample, write_samples, SampleSet, SamplerError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NearoptStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Bad configuration or parameter.
    Config = 3,
    /// An upstream stage has not run or its outputs changed.
    Stale = 4,
    /// The pathway LP has no feasible solution.
    Infeasible = 5,
    /// Solver or numerical failure.
    Runtime = 6,
    /// File could not be read or written.
    Io = 7,
    /// Index outside the valid range.
    OutOfRange = 8,
    /// A Rust panic was caught at the boundary.
    Panic = 9,
}

/// Pipeline stage selector for [`nearopt_pipeline_run`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NearoptStage {
    Optimize = 0,
    Maa = 1,
    Sample = 2,
    Cluster = 3,
    Tree = 4,
    Report = 5,
    All = 6,
}

/// A loaded run configuration.
pub struct NearoptPipeline(Pipeline);

/// An in-memory sample matrix.
pub struct NearoptSamples(SampleSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(NearoptStatus, String);

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let status = match &e {
            _ if e.exit_code() == 2 => NearoptStatus::Config,
            PipelineError::Stale { .. } => NearoptStatus::Stale,
            PipelineError::Infeasible { .. } => NearoptStatus::Infeasible,
            PipelineError::Io { .. } => NearoptStatus::Io,
            _ => NearoptStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

impl From<SamplerError> for Failure {
    fn from(e: SamplerError) -> Self {
        let status = match &e {
            SamplerError::Io { .. } | SamplerError::Format(_) | SamplerError::Json(_) => NearoptStatus::Io,
            SamplerError::Parameter(_) => NearoptStatus::Config,
            _ => NearoptStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure(NearoptStatus::Config, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NearoptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NearoptStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            NearoptStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(NearoptStatus::NullArgument, format!("{name} is null"))
}

/// # Safety
/// `p` must be null or a valid nul-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(NearoptStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

fn out_string(s: String, out: *mut *mut c_char) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    let c = CString::new(s).map_err(|_| Failure(NearoptStatus::Runtime, "string contains nul".into()))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call on this thread.
#[no_mangle]
pub extern "C" fn nearopt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn nearopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nearopt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Capital recovery factor for interest `rate` over `years`.
///
/// # Safety
/// `out` must be null or point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nearopt_annuity(rate: f64, years: u32, out: *mut f64) -> NearoptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = annuity(rate, years)?;
        Ok(())
    })
}

/// Annualized cost per unit of capacity (capex in EUR/kW, result in EUR/kW/a).
///
/// # Safety
/// `out` must be null or point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nearopt_annualized_cost(
    capex: f64,
    fixed_om: f64,
    rate: f64,
    years: u32,
    out: *mut f64,
) -> NearoptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = TechnologyParams {
            capex,
            fixed_om,
            lifetime_years: years,
            interest_rate: rate,
            ..TechnologyParams::named("ffi")
        };
        *out = annualized_cost(&params)?;
        Ok(())
    })
}

/// Loads a run configuration. `pathway` may be null to keep every
/// configured pathway; `seed` overrides the configured seed when
/// `override_seed` is non-zero.
///
/// # Safety
/// String arguments must be null or valid nul-terminated strings; `out`
/// must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nearopt_pipeline_open(
    config_path: *const c_char,
    pathway: *const c_char,
    override_seed: i32,
    seed: u64,
    out: *mut *mut NearoptPipeline,
) -> NearoptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(config_path, "config_path")?;
        let pathway = opt_str_arg(pathway, "pathway")?;
        let seed = (override_seed != 0).then_some(seed);
        let p = Pipeline::from_path(Path::new(path), pathway, seed)?;
        *out = Box::into_raw(Box::new(NearoptPipeline(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from [`nearopt_pipeline_open`], freed once.
#[no_mangle]
pub unsafe extern "C" fn nearopt_pipeline_free(p: *mut NearoptPipeline) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Runs one stage, or all of them.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nearopt_pipeline_run(p: *const NearoptPipeline, stage: NearoptStage) -> NearoptStatus {
    guard(|| {
        let p = &p.as_ref().ok_or_else(|| null("pipeline"))?.0;
        match stage {
            NearoptStage::Optimize => p.optimize().map(drop),
            NearoptStage::Maa => p.maa().map(drop),
            NearoptStage::Sample => p.sample().map(drop),
            NearoptStage::Cluster => p.cluster().map(drop),
            NearoptStage::Tree => p.tree().map(drop),
            NearoptStage::Report => p.report().map(drop),
            NearoptStage::All => p.run_all().map(drop),
        }?;
        Ok(())
    })
}

/// Output directory of the run, as a new string.
///
/// # Safety
/// `p` must be a live handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nearopt_pipeline_output_dir(p: *const NearoptPipeline, out: *mut *mut c_char) -> NearoptStatus {
    guard(|| {
        let p = &p.as_ref().ok_or_else(|| null("pipeline"))?.0;
        out_string(p.output_dir().display().to_string(), out)
    })
}

/// Reads a `.samples` file and its sidecar.
///
/// # Safety
/// `path` must be a valid string; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nearopt_samples_read(path: *const c_char, out: *mut *mut NearoptSamples) -> NearoptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let set = read_samples(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(NearoptSamples(set)));
        Ok(())
    })
}

/// Draws `n` uniform samples from the hull stored in an MAA hull JSON file.
///
/// # Safety
/// `hull_path` must be a valid string; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nearopt_samples_from_hull(
    hull_path: *const c_char,
    n: usize,
    seed: u64,
    out: *mut *mut NearoptSamples,
) -> NearoptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = Path::new(str_arg(hull_path, "hull_path")?);
        let bytes = std::fs::read(path).map_err(|e| Failure(NearoptStatus::Io, format!("{}: {e}", path.display())))?;
        let maa: MaaResult =
            serde_json::from_slice(&bytes).map_err(|e| Failure(NearoptStatus::Io, format!("{}: {e}", path.display())))?;
        let mut set = sample(&maa.hull, n, seed)?;
        set.variables = maa.config.mga_variables.clone();
        set.units = set.variables.iter().map(|v| nearopt::model::mga_unit(v).to_string()).collect();
        *out = Box::into_raw(Box::new(NearoptSamples(set)));
        Ok(())
    })
}

/// Writes samples to `path` plus the `path.json` sidecar.
///
/// # Safety
/// `s` must be a live handle and `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn nearopt_samples_write(s: *const NearoptSamples, path: *const c_char) -> NearoptStatus {
    guard(|| {
        let s = &s.as_ref().ok_or_else(|| null("samples"))?.0;
        write_samples(Path::new(str_arg(path, "path")?), s)?;
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn nearopt_samples_free(s: *mut NearoptSamples) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Row count; 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nearopt_samples_rows(s: *const NearoptSamples) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// Column count; 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nearopt_samples_cols(s: *const NearoptSamples) -> usize {
    s.as_ref().map_or(0, |s| s.0.dim())
}

/// Row-major `rows × cols` matrix, valid while the handle lives.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nearopt_samples_data(s: *const NearoptSamples) -> *const f64 {
    s.as_ref().map_or(ptr::null(), |s| s.0.matrix.as_ptr())
}

/// Copies row `row` into `buf`, which holds `len` doubles.
///
/// # Safety
/// `s` must be a live handle; `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nearopt_samples_row(s: *const NearoptSamples, row: usize, buf: *mut f64, len: usize) -> NearoptStatus {
    guard(|| {
        let s = &s.as_ref().ok_or_else(|| null("samples"))?.0;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if row >= s.len() || len < s.dim() {
            return Err(Failure(
                NearoptStatus::OutOfRange,
                format!("row {row} of {} with buffer {len} for {} columns", s.len(), s.dim()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, s.dim()).copy_from_slice(s.row(row));
        Ok(())
    })
}

/// Name of column `col`, as a new string.
///
/// # Safety
/// `s` must be a live handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn nearopt_samples_variable(s: *const NearoptSamples, col: usize, out: *mut *mut c_char) -> NearoptStatus {
    guard(|| {
        let s = &s.as_ref().ok_or_else(|| null("samples"))?.0;
        let name = s
            .variables
            .get(col)
            .ok_or_else(|| Failure(NearoptStatus::OutOfRange, format!("column {col} of {}", s.dim())))?;
        out_string(name.clone(), out)
    })
}
