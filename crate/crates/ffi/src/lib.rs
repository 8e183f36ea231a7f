//! C ABI over `resonance-core`.
//!
//! Objects are opaque handles created by `res_*_new`-style constructors and
//! released with the matching `res_*_free`. Every fallible call returns a
//! [`ResStatus`]; on failure `res_last_error` gives the message for the
//! calling thread. Strings returned to C are owned by the caller and must be
//! released with [`res_string_free`].

use resonance_core::config::{Format, RunConfig};
use resonance_core::dirichlet::eval_dn;
use resonance_core::moments::{diagonal_sum, DEFAULT_BUDGET_TERMS};
use resonance_core::multfn::UnimodularCmf;
use resonance_core::ntcore::FactorTable;
use resonance_core::resonator::{PrimeWeights, Resonator, DEFAULT_SUPPORT_BUDGET};
use resonance_core::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResStatus {
    Ok = 0,
    InvalidArgument = 1,
    OutOfRange = 2,
    ResourceLimit = 3,
    NumericalFailure = 4,
    NullPointer = 5,
    InvalidUtf8 = 6,
    Panic = 7,
}

pub struct ResFactorTable(FactorTable);
pub struct ResCmf(UnimodularCmf);
pub struct ResResonator(Resonator);

/// Plain-data view of a resonator. Optional values are NaN when absent.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResResonatorSummary {
    pub log_x: f64,
    pub lambda: f64,
    pub support_lo: f64,
    pub support_hi: f64,
    pub prime_count: usize,
    pub degenerate: bool,
    pub alpha_default: f64,
    pub sum_r_squared: f64,
    pub log_euler_product: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

fn set_error(status: ResStatus, msg: String) -> ResStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
    status
}

fn from_core(e: Error) -> ResStatus {
    let status = match e {
        Error::InvalidArgument(_) => ResStatus::InvalidArgument,
        Error::OutOfRange { .. } => ResStatus::OutOfRange,
        Error::ResourceLimit(_) => ResStatus::ResourceLimit,
        Error::NumericalFailure { .. } => ResStatus::NumericalFailure,
    };
    set_error(status, e.to_string())
}

/// Runs `body`, clearing the thread's error first and turning panics into a status.
fn guard(body: impl FnOnce() -> Result<(), ResStatus>) -> ResStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => ResStatus::Ok,
        Ok(Err(s)) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(ResStatus::Panic, msg)
        }
    }
}

fn null(what: &str) -> ResStatus {
    set_error(ResStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, ResStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), ResStatus> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, ResStatus> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| set_error(ResStatus::InvalidUtf8, "string contains NUL".into()))
}

/// Message for the last failed call on this thread, or null. Free it with
/// [`res_string_free`].
#[no_mangle]
pub extern "C" fn res_last_error() -> *mut c_char {
    LAST_ERROR
        .with(|e| e.borrow().clone())
        .and_then(|m| CString::new(m).ok())
        .map_or(ptr::null_mut(), CString::into_raw)
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn res_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Factorization table for `1..=limit`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn res_factor_table_new(limit: u32, out: *mut *mut ResFactorTable) -> ResStatus {
    guard(|| {
        let t = FactorTable::new(limit).map_err(from_core)?;
        write(out, Box::into_raw(Box::new(ResFactorTable(t))), "out")
    })
}

/// # Safety
/// `table` must come from [`res_factor_table_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn res_factor_table_free(table: *mut ResFactorTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

unsafe fn new_cmf(f: Result<UnimodularCmf, Error>, out: *mut *mut ResCmf) -> ResStatus {
    guard(|| {
        let f = f.map_err(from_core)?;
        write(out, Box::into_raw(Box::new(ResCmf(f))), "out")
    })
}

/// `f(n) = 1`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn res_cmf_constant_one(out: *mut *mut ResCmf) -> ResStatus {
    new_cmf(Ok(UnimodularCmf::constant_one()), out)
}

/// `f(n) = n^{i alpha}`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn res_cmf_archimedean(alpha: f64, out: *mut *mut ResCmf) -> ResStatus {
    new_cmf(UnimodularCmf::archimedean(alpha), out)
}

/// Steinhaus random multiplicative function with values fixed by `seed` on
/// primes up to `prime_limit`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn res_cmf_steinhaus(seed: u64, prime_limit: u64, out: *mut *mut ResCmf) -> ResStatus {
    new_cmf(UnimodularCmf::steinhaus(seed, prime_limit), out)
}

/// # Safety
/// `f` must come from a `res_cmf_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn res_cmf_free(f: *mut ResCmf) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// `D_N(t) = N^{-1/2} sum_{n <= N} f(n) n^{it}`, written as real and imaginary parts.
///
/// # Safety
/// Handles must be live; `re` and `im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn res_eval_dn(
    f: *const ResCmf,
    table: *const ResFactorTable,
    n: u64,
    t: f64,
    re: *mut f64,
    im: *mut f64,
) -> ResStatus {
    guard(|| {
        let f = deref(f, "f")?;
        let table = deref(table, "table")?;
        let z = eval_dn(&f.0, n, t, &table.0).map_err(from_core)?;
        write(re, z.re, "re")?;
        write(im, z.im, "im")
    })
}

/// Resonator for `log X = log_x`. The table must cover its prime window.
///
/// # Safety
/// `table` must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn res_resonator_new(
    log_x: f64,
    table: *const ResFactorTable,
    out: *mut *mut ResResonator,
) -> ResStatus {
    guard(|| {
        let table = deref(table, "table")?;
        let r = Resonator::from_log_x(log_x, &table.0).map_err(from_core)?;
        write(out, Box::into_raw(Box::new(ResResonator(r))), "out")
    })
}

/// # Safety
/// `res` must come from [`res_resonator_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn res_resonator_free(res: *mut ResResonator) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Fills `out`; `sum_r_squared` covers support integers up to `sum_cap`
/// (pass a non-positive value to skip it).
///
/// # Safety
/// `res` must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn res_resonator_summary(
    res: *const ResResonator,
    sum_cap: f64,
    out: *mut ResResonatorSummary,
) -> ResStatus {
    guard(|| {
        let res = deref(res, "res")?;
        let s = res.0.summary((sum_cap > 0.0).then_some(sum_cap));
        let c = ResResonatorSummary {
            log_x: s.log_x,
            lambda: s.lambda,
            support_lo: s.support_lo,
            support_hi: s.support_hi,
            prime_count: s.prime_count,
            degenerate: s.degenerate,
            alpha_default: s.alpha_default,
            sum_r_squared: s.sum_r_squared.unwrap_or(f64::NAN),
            log_euler_product: s.log_euler_product,
        };
        write(out, c, "out")
    })
}

/// Diagonal sum `sum_{ma = nb; m, n <= N; a, b <= x} r(a) r(b)`.
///
/// # Safety
/// `res` must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn res_resonator_diagonal_sum(
    res: *const ResResonator,
    n: u64,
    x: f64,
    out: *mut f64,
) -> ResStatus {
    guard(|| {
        let res = deref(res, "res")?;
        let support = res.0.support(x, DEFAULT_SUPPORT_BUDGET).map_err(from_core)?;
        let d = diagonal_sum(&support, n, DEFAULT_BUDGET_TERMS).map_err(from_core)?;
        write(out, d, "out")
    })
}

/// Runs a certificate from a JSON config (the CLI's config format) and
/// returns the JSON report through `out`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn res_certify_json(config_json: *const c_char, out: *mut *mut c_char) -> ResStatus {
    guard(|| {
        if config_json.is_null() {
            return Err(null("config_json"));
        }
        let text = CStr::from_ptr(config_json)
            .to_str()
            .map_err(|e| set_error(ResStatus::InvalidUtf8, e.to_string()))?;
        let mut cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| set_error(ResStatus::InvalidArgument, format!("invalid config: {e}")))?;
        cfg.format = Format::Json;
        cfg.out = None;
        cfg.validate().map_err(from_core)?;
        let report = resonance_core::cli::cmd_certify(&cfg).map_err(|e| {
            let status = match e.code {
                resonance_core::cli::EXIT_USAGE => ResStatus::InvalidArgument,
                resonance_core::cli::EXIT_RESOURCE => ResStatus::ResourceLimit,
                _ => ResStatus::NumericalFailure,
            };
            set_error(status, e.message)
        })?;
        write(out, into_c_string(report)?, "out")
    })
}
