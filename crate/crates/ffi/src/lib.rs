//! C interface to `subpost`.
//!
//! Every fallible function returns a [`SubpostStatus`]; on failure the
//! message is available from [`subpost_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use nalgebra::DMatrix;
use subpost::combine::{combine_ar, combine_cmc, gaussian_kl, tv_bound_from_kl, CombinedSample};
use subpost::experiment::{run_experiment, write_outputs, ExperimentConfig};
use subpost::metrics::{l2_distance, Comparand, SampleView};
use subpost::sampler::ChainDraws;
use subpost::shard::SubposteriorResult;
use subpost::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubpostStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotPositiveDefinite = 4,
    Numerical = 5,
    Io = 6,
    Config = 7,
    CellFailures = 8,
    Panic = 9,
    Other = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> SubpostStatus {
    match err {
        Error::Precondition(_) | Error::ShardSize { .. } | Error::DegenerateSample(_) | Error::InsufficientRows { .. } => {
            SubpostStatus::InvalidArgument
        }
        Error::DimensionMismatch { .. } => SubpostStatus::DimensionMismatch,
        Error::NotPositiveDefinite | Error::SingularCovariance | Error::SingularInformation => {
            SubpostStatus::NotPositiveDefinite
        }
        Error::Numerical { .. } | Error::NonFinite(_) | Error::NegativeKl(_) | Error::NonFiniteStep => {
            SubpostStatus::Numerical
        }
        Error::Io { .. } | Error::Csv(_) | Error::Json(_) => SubpostStatus::Io,
        Error::Config(_) | Error::UnknownExample(_) | Error::Parse { .. } => SubpostStatus::Config,
        Error::Context { source, .. } => status_of(source),
        _ => SubpostStatus::Other,
    }
}

fn guard(f: impl FnOnce() -> Result<(), SubpostStatus>) -> SubpostStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SubpostStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            SubpostStatus::Panic
        }
    }
}

fn fail(err: Error) -> SubpostStatus {
    let s = status_of(&err);
    set_error(err.to_string());
    s
}

fn null(what: &str) -> SubpostStatus {
    set_error(format!("{what} is null"));
    SubpostStatus::NullPointer
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn subpost_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn subpost_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// A set of subposterior chains of common dimension, built incrementally.
pub struct SubpostChains {
    dim: usize,
    chains: Vec<ChainDraws>,
}

/// A combined sample.
pub struct SubpostSample {
    inner: CombinedSample,
}

/// Creates an empty chain set of dimension `dim`.
#[no_mangle]
pub extern "C" fn subpost_chains_new(dim: usize, out: *mut *mut SubpostChains) -> SubpostStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if dim == 0 {
            set_error("dim must be positive");
            return Err(SubpostStatus::InvalidArgument);
        }
        let h = Box::new(SubpostChains { dim, chains: Vec::new() });
        // SAFETY: `out` is non-null and points to writable storage per the contract.
        unsafe { *out = Box::into_raw(h) };
        Ok(())
    })
}

/// Appends a chain of `n_draws` row-major draws (`n_draws * dim` values).
///
/// # Safety
/// `chains` must come from [`subpost_chains_new`]; `draws` must point to
/// `n_draws * dim` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn subpost_chains_add(
    chains: *mut SubpostChains,
    draws: *const f64,
    n_draws: usize,
) -> SubpostStatus {
    guard(|| {
        let Some(c) = (unsafe { chains.as_mut() }) else {
            return Err(null("chains"));
        };
        if draws.is_null() {
            return Err(null("draws"));
        }
        let data = unsafe { std::slice::from_raw_parts(draws, n_draws * c.dim) }.to_vec();
        let index = c.chains.len();
        let chain = ChainDraws::new(data, c.dim, index, 0, 0, 1.0).map_err(fail)?;
        c.chains.push(chain);
        Ok(())
    })
}

/// Number of chains added so far.
///
/// # Safety
/// `chains` must be null or come from [`subpost_chains_new`].
#[no_mangle]
pub unsafe extern "C" fn subpost_chains_count(chains: *const SubpostChains) -> usize {
    unsafe { chains.as_ref() }.map_or(0, |c| c.chains.len())
}

/// # Safety
/// `chains` must be null or come from [`subpost_chains_new`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn subpost_chains_free(chains: *mut SubpostChains) {
    if !chains.is_null() {
        drop(unsafe { Box::from_raw(chains) });
    }
}

fn combine_with(
    chains: *const SubpostChains,
    out: *mut *mut SubpostSample,
    f: fn(&SubposteriorResult) -> subpost::Result<CombinedSample>,
) -> SubpostStatus {
    guard(|| {
        let Some(c) = (unsafe { chains.as_ref() }) else {
            return Err(null("chains"));
        };
        if out.is_null() {
            return Err(null("out"));
        }
        let names = (1..=c.dim).map(|j| format!("x{j}")).collect();
        let sub = SubposteriorResult::from_chains(c.chains.clone(), names).map_err(fail)?;
        let inner = f(&sub).map_err(fail)?;
        unsafe { *out = Box::into_raw(Box::new(SubpostSample { inner })) };
        Ok(())
    })
}

/// Average of recentred subposteriors.
///
/// # Safety
/// `chains` must come from [`subpost_chains_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn subpost_combine_ar(chains: *const SubpostChains, out: *mut *mut SubpostSample) -> SubpostStatus {
    combine_with(chains, out, combine_ar)
}

/// Consensus Monte Carlo with inverse-covariance weights.
///
/// # Safety
/// `chains` must come from [`subpost_chains_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn subpost_combine_cmc(
    chains: *const SubpostChains,
    out: *mut *mut SubpostSample,
) -> SubpostStatus {
    combine_with(chains, out, combine_cmc)
}

/// Number of draws in a combined sample.
///
/// # Safety
/// `sample` must be null or come from a combine function.
#[no_mangle]
pub unsafe extern "C" fn subpost_sample_len(sample: *const SubpostSample) -> usize {
    unsafe { sample.as_ref() }.map_or(0, |s| s.inner.len())
}

/// # Safety
/// `sample` must be null or come from a combine function.
#[no_mangle]
pub unsafe extern "C" fn subpost_sample_dim(sample: *const SubpostSample) -> usize {
    unsafe { sample.as_ref() }.map_or(0, |s| s.inner.dim())
}

/// Copies the row-major draws into `buf`, which must hold `len * dim` values.
///
/// # Safety
/// `sample` must come from a combine function; `buf` must point to `buf_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn subpost_sample_draws(
    sample: *const SubpostSample,
    buf: *mut f64,
    buf_len: usize,
) -> SubpostStatus {
    guard(|| {
        let Some(s) = (unsafe { sample.as_ref() }) else {
            return Err(null("sample"));
        };
        copy_out(s.inner.as_slice(), buf, buf_len)
    })
}

/// Copies the recentring point (`dim` values) into `buf`.
///
/// # Safety
/// `sample` must come from a combine function; `buf` must point to `buf_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn subpost_sample_center(
    sample: *const SubpostSample,
    buf: *mut f64,
    buf_len: usize,
) -> SubpostStatus {
    guard(|| {
        let Some(s) = (unsafe { sample.as_ref() }) else {
            return Err(null("sample"));
        };
        copy_out(s.inner.center.values(), buf, buf_len)
    })
}

fn copy_out(src: &[f64], buf: *mut f64, buf_len: usize) -> Result<(), SubpostStatus> {
    if buf.is_null() {
        return Err(null("buf"));
    }
    if buf_len < src.len() {
        set_error(format!("buffer holds {buf_len} values, need {}", src.len()));
        return Err(SubpostStatus::InvalidArgument);
    }
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len()) };
    Ok(())
}

/// # Safety
/// `sample` must be null or come from a combine function, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn subpost_sample_free(sample: *mut SubpostSample) {
    if !sample.is_null() {
        drop(unsafe { Box::from_raw(sample) });
    }
}

/// `KL(N(mu1, sigma) || N(mu2, sigma))` with `sigma` row-major `dim x dim`.
///
/// # Safety
/// `mu1`, `mu2` must point to `dim` doubles, `sigma` to `dim * dim`, `out` to one.
#[no_mangle]
pub unsafe extern "C" fn subpost_gaussian_kl(
    mu1: *const f64,
    mu2: *const f64,
    sigma: *const f64,
    dim: usize,
    out: *mut f64,
) -> SubpostStatus {
    guard(|| {
        if mu1.is_null() || mu2.is_null() || sigma.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let (a, b, s) = unsafe {
            (
                std::slice::from_raw_parts(mu1, dim),
                std::slice::from_raw_parts(mu2, dim),
                std::slice::from_raw_parts(sigma, dim * dim),
            )
        };
        let kl = gaussian_kl(a, b, &DMatrix::from_row_slice(dim, dim, s)).map_err(fail)?;
        unsafe { *out = kl };
        Ok(())
    })
}

/// Total-variation bound `2 sqrt(kl)`.
///
/// # Safety
/// `out` must point to one writable double.
#[no_mangle]
pub unsafe extern "C" fn subpost_tv_bound(kl: f64, out: *mut f64) -> SubpostStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let v = tv_bound_from_kl(kl).map_err(fail)?;
        unsafe { *out = v };
        Ok(())
    })
}

/// Marginal-sum L2 distance between two row-major samples of dimension `dim`.
/// Writes the standardized total to `out_total` and, if `per_marginal` is
/// non-null, the `dim` standardized per-marginal values.
///
/// # Safety
/// `a` must point to `n_a * dim` doubles, `b` to `n_b * dim`, `out_total` to
/// one and `per_marginal` (if non-null) to `dim`.
#[no_mangle]
pub unsafe extern "C" fn subpost_l2_samples(
    a: *const f64,
    n_a: usize,
    b: *const f64,
    n_b: usize,
    dim: usize,
    grid_size: usize,
    out_total: *mut f64,
    per_marginal: *mut f64,
) -> SubpostStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out_total.is_null() {
            return Err(null("argument"));
        }
        if dim == 0 {
            set_error("dim must be positive");
            return Err(SubpostStatus::InvalidArgument);
        }
        let (sa, sb) = unsafe { (std::slice::from_raw_parts(a, n_a * dim), std::slice::from_raw_parts(b, n_b * dim)) };
        let names: Vec<String> = (1..=dim).map(|j| format!("x{j}")).collect();
        let rep = l2_distance(
            SampleView::new(sa, dim),
            &Comparand::Samples(SampleView::new(sb, dim)),
            &names,
            grid_size,
        )
        .map_err(fail)?;
        unsafe { *out_total = rep.total };
        if !per_marginal.is_null() {
            unsafe { ptr::copy_nonoverlapping(rep.per_marginal.as_ptr(), per_marginal, dim) };
        }
        Ok(())
    })
}

/// Runs the experiment in the TOML file `config_path` and writes its outputs
/// to `output_dir` (or the config's directory when null). `all_ok` receives
/// 1 if every cell completed; a run with failed cells returns
/// [`SubpostStatus::CellFailures`].
///
/// # Safety
/// `config_path` and `output_dir` (if non-null) must be NUL-terminated UTF-8;
/// `all_ok` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn subpost_run_experiment(
    config_path: *const c_char,
    output_dir: *const c_char,
    all_ok: *mut i32,
) -> SubpostStatus {
    guard(|| {
        if config_path.is_null() {
            return Err(null("config_path"));
        }
        let to_path = |p: *const c_char| -> Result<PathBuf, SubpostStatus> {
            unsafe { CStr::from_ptr(p) }.to_str().map(PathBuf::from).map_err(|_| {
                set_error("path is not valid UTF-8");
                SubpostStatus::InvalidArgument
            })
        };
        let mut cfg = ExperimentConfig::load(&to_path(config_path)?).map_err(fail)?;
        if !output_dir.is_null() {
            cfg.output_dir = to_path(output_dir)?;
        }
        let run = run_experiment(&cfg).map_err(fail)?;
        write_outputs(&run, &cfg.output_dir).map_err(fail)?;
        let ok = run.table.all_ok();
        if !all_ok.is_null() {
            unsafe { *all_ok = i32::from(ok) };
        }
        if ok {
            Ok(())
        } else {
            set_error("one or more (K, method) cells failed; see results.csv");
            Err(SubpostStatus::CellFailures)
        }
    })
}
