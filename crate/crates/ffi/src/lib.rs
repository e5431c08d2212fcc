//! C ABI over `safelevel`.
//!
//! Every fallible call returns an [`SlStatus`] and writes its result through an
//! out-pointer. On failure the message is kept per thread and can be read with
//! [`sl_last_error_message`]. Handles are opaque and must be released with the
//! matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use safelevel::bayes::{andrasik_lookup, posterior_deterioration_prob, BetaPrior};
use safelevel::classify::{classify_p, classify_posterior, Category, PThresholds, PosteriorThresholds};
use safelevel::probkit::{binom_upper_tail, reg_inc_beta, RandomStream};
use safelevel::rate_ratio::{generate_p_table, rate_ratio_test_with, CountWindow, PTable, TwoSidedMethod};
use safelevel::simulate::{estimate_error_rates, DecisionCounted, ErrorRateStudy, Procedure};
use safelevel::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    OutOfRange = 3,
    InfiniteMoment = 4,
    DimensionMismatch = 5,
    InvalidArgument = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlCategory {
    NoDeterioration = 0,
    PotentialDeterioration = 1,
    ProbableDeterioration = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlTwoSidedMethod {
    Central = 0,
    MinLikelihood = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlRateRatioResult {
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    /// Conditional success probability under the null.
    pub p0: f64,
    /// Total events conditioned on.
    pub conditional_n: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlErrorRates {
    pub alpha_hat: f64,
    pub power_hat: f64,
    pub mc_stderr_alpha: f64,
    pub mc_stderr_power: f64,
    pub replications: u64,
}

/// One-sided p-value table.
pub struct SlPTable {
    inner: PTable,
}

/// Error-rate study under construction.
pub struct SlStudy {
    inner: ErrorRateStudy,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SlStatus {
    match err {
        Error::Domain(_) => SlStatus::Domain,
        Error::InfiniteMoment(_) => SlStatus::InfiniteMoment,
        Error::OutOfRange { .. } => SlStatus::OutOfRange,
        Error::DimensionMismatch(_) => SlStatus::DimensionMismatch,
    }
}

enum Fail {
    Core(Error),
    Null(&'static str),
    Arg(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlStatus::Ok,
        Ok(Err(Fail::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(name))) => {
            set_error(&format!("{name} is null"));
            SlStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(&msg);
            SlStatus::InvalidArgument
        }
        Err(_) => {
            set_error("internal panic");
            SlStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, name: &'static str, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn borrow<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(name))
}

fn category(c: Category) -> SlCategory {
    match c {
        Category::NoDeterioration => SlCategory::NoDeterioration,
        Category::PotentialDeterioration => SlCategory::PotentialDeterioration,
        Category::ProbableDeterioration => SlCategory::ProbableDeterioration,
    }
}

/// Message of the last failed call on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn sl_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Conditional rate-ratio test of `target_events` in `target_exposure`
/// against `ref_events` in `ref_exposure`.
///
/// # Safety
/// `out` must be null or point to writable memory for one result.
#[no_mangle]
pub unsafe extern "C" fn sl_rate_ratio_test(
    ref_events: u64,
    ref_exposure: f64,
    target_events: u64,
    target_exposure: f64,
    null_ratio: f64,
    method: SlTwoSidedMethod,
    out: *mut SlRateRatioResult,
) -> SlStatus {
    guard(|| {
        let method = match method {
            SlTwoSidedMethod::Central => TwoSidedMethod::Central,
            SlTwoSidedMethod::MinLikelihood => TwoSidedMethod::MinLikelihood,
        };
        let r = rate_ratio_test_with(
            &CountWindow::new(ref_events, ref_exposure, "reference")?,
            &CountWindow::new(target_events, target_exposure, "target")?,
            null_ratio,
            method,
        )?;
        write(
            out,
            "out",
            SlRateRatioResult {
                p_one_sided: r.p_one_sided,
                p_two_sided: r.p_two_sided,
                p0: r.p0,
                conditional_n: r.conditional_n,
            },
        )
    })
}

/// Posterior probability that the target rate exceeds the reference rate
/// under a Beta(`prior_alpha`, `prior_beta`) prior.
///
/// # Safety
/// `out` must be null or point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn sl_posterior_deterioration(
    prior_alpha: f64,
    prior_beta: f64,
    ref_events: u64,
    ref_exposure: f64,
    target_events: u64,
    target_exposure: f64,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let r = posterior_deterioration_prob(
            &BetaPrior::new(prior_alpha, prior_beta)?,
            &CountWindow::new(ref_events, ref_exposure, "reference")?,
            &CountWindow::new(target_events, target_exposure, "target")?,
        )?;
        write(out, "out", r.posterior_deterioration)
    })
}

/// Embedded published posterior level for 4-year reference and 1-year target
/// counts. Counts outside the table give `SL_STATUS_OUT_OF_RANGE`.
///
/// # Safety
/// `out` must be null or point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn sl_posterior_table_lookup(n_ref: usize, n_target: usize, out: *mut f64) -> SlStatus {
    guard(|| write(out, "out", andrasik_lookup(n_ref, n_target)?))
}

/// # Safety
/// `out` must be null or point to a writable category.
#[no_mangle]
pub unsafe extern "C" fn sl_classify_p(p: f64, probable: f64, potential: f64, out: *mut SlCategory) -> SlStatus {
    guard(|| {
        let d = classify_p(p, &PThresholds::new(probable, potential)?)?;
        write(out, "out", category(d.category))
    })
}

/// # Safety
/// `out` must be null or point to a writable category.
#[no_mangle]
pub unsafe extern "C" fn sl_classify_posterior(prob: f64, alert: f64, warning: f64, out: *mut SlCategory) -> SlStatus {
    guard(|| {
        let d = classify_posterior(prob, &PosteriorThresholds::new(alert, warning)?)?;
        write(out, "out", category(d.category))
    })
}

/// P(X >= k) for X ~ Binomial(n, p).
///
/// # Safety
/// `out` must be null or point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn sl_binom_upper_tail(k: u64, n: u64, p: f64, out: *mut f64) -> SlStatus {
    guard(|| write(out, "out", binom_upper_tail(k, n, p)?))
}

/// Regularized incomplete beta I_x(a, b).
///
/// # Safety
/// `out` must be null or point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn sl_reg_inc_beta(a: f64, b: f64, x: f64, out: *mut f64) -> SlStatus {
    guard(|| write(out, "out", reg_inc_beta(a, b, x)?))
}

/// Builds the (max_ref + 1) x (max_target + 1) table of one-sided p-values.
///
/// # Safety
/// `out` must be null or point to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn sl_ptable_new(
    max_ref: u64,
    max_target: u64,
    ref_exposure: f64,
    target_exposure: f64,
    out: *mut *mut SlPTable,
) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        if max_ref > 10_000 || max_target > 10_000 {
            return Err(Fail::Arg(format!("table of {max_ref}x{max_target} is too large")));
        }
        let inner = generate_p_table(max_ref, max_target, ref_exposure, target_exposure)?;
        out.write(Box::into_raw(Box::new(SlPTable { inner })));
        Ok(())
    })
}

/// # Safety
/// `table` must come from `sl_ptable_new`; out-pointers must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sl_ptable_dims(table: *const SlPTable, rows: *mut usize, cols: *mut usize) -> SlStatus {
    guard(|| {
        let t = borrow(table, "table")?;
        write(rows, "rows", t.inner.rows())?;
        write(cols, "cols", t.inner.cols())
    })
}

/// # Safety
/// `table` must come from `sl_ptable_new`; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sl_ptable_get(table: *const SlPTable, row: usize, col: usize, out: *mut f64) -> SlStatus {
    guard(|| {
        let t = &borrow(table, "table")?.inner;
        let v = t.get(row, col).ok_or(Error::OutOfRange {
            row,
            col,
            rows: t.rows(),
            cols: t.cols(),
        })?;
        write(out, "out", v)
    })
}

/// Releases a table. Null is ignored.
///
/// # Safety
/// `table` must be null or come from `sl_ptable_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sl_ptable_free(table: *mut SlPTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// New study using the rate-ratio procedure with thresholds 0.1 / 0.25 and
/// counting probable decisions as detections.
///
/// # Safety
/// `out` must be null or point to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn sl_study_new(
    rate_ref: f64,
    rate_target_null: f64,
    rate_target_alt: f64,
    exposure_ref: f64,
    exposure_target: f64,
    replications: u64,
    out: *mut *mut SlStudy,
) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let inner = ErrorRateStudy {
            procedure: Procedure::RateRatioP(PThresholds::default()),
            rate_ref,
            rate_target_null,
            rate_target_alt,
            exposure_ref,
            exposure_target,
            decision_counted: DecisionCounted::default(),
            replications,
        };
        inner.validate()?;
        out.write(Box::into_raw(Box::new(SlStudy { inner })));
        Ok(())
    })
}

/// # Safety
/// `study` must come from `sl_study_new`.
#[no_mangle]
pub unsafe extern "C" fn sl_study_use_rate_ratio(study: *mut SlStudy, probable: f64, potential: f64) -> SlStatus {
    guard(|| {
        let s = borrow_mut(study, "study")?;
        s.inner.procedure = Procedure::RateRatioP(PThresholds::new(probable, potential)?);
        Ok(())
    })
}

/// Switches to the embedded posterior table; counts beyond it are clipped.
///
/// # Safety
/// `study` must come from `sl_study_new`.
#[no_mangle]
pub unsafe extern "C" fn sl_study_use_posterior_table(study: *mut SlStudy, alert: f64, warning: f64) -> SlStatus {
    guard(|| {
        let s = borrow_mut(study, "study")?;
        s.inner.procedure = Procedure::AndrasikTable(PosteriorThresholds::new(alert, warning)?);
        Ok(())
    })
}

/// Non-zero: potential decisions also count as detections.
///
/// # Safety
/// `study` must come from `sl_study_new`.
#[no_mangle]
pub unsafe extern "C" fn sl_study_count_potential(study: *mut SlStudy, enabled: bool) -> SlStatus {
    guard(|| {
        let s = borrow_mut(study, "study")?;
        s.inner.decision_counted = if enabled {
            DecisionCounted::PotentialOrWorse
        } else {
            DecisionCounted::ProbableOrWorse
        };
        Ok(())
    })
}

/// Runs the study. Results depend on `seed` only, not on `workers`
/// (0 means all available threads).
///
/// # Safety
/// `study` must come from `sl_study_new`; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sl_study_run(
    study: *const SlStudy,
    seed: u64,
    workers: usize,
    out: *mut SlErrorRates,
) -> SlStatus {
    guard(|| {
        let s = borrow(study, "study")?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let stream = RandomStream::new(seed, safelevel::cli::POWER_STREAM);
        let r = estimate_error_rates(&s.inner, &stream, workers)?;
        write(
            out,
            "out",
            SlErrorRates {
                alpha_hat: r.alpha_hat,
                power_hat: r.power_hat,
                mc_stderr_alpha: r.mc_stderr_alpha,
                mc_stderr_power: r.mc_stderr_power,
                replications: r.replications,
            },
        )
    })
}

/// Releases a study. Null is ignored.
///
/// # Safety
/// `study` must be null or come from `sl_study_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sl_study_free(study: *mut SlStudy) {
    if !study.is_null() {
        drop(Box::from_raw(study));
    }
}
