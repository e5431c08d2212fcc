use std::ffi::CStr;
use std::ptr;

use safelevel::probkit::RandomStream;
use safelevel::simulate::estimate_error_rates;
use safelevel_ffi::*;

fn last_error() -> String {
    let p = sl_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

// P(X >= y) for X ~ Bin(n, p) by summing exact terms
fn tail(y: u64, n: u64, p: f64) -> f64 {
    let mut c = 1.0;
    let mut total = 0.0;
    for k in 0..=n {
        if k > 0 {
            c = c * (n - k + 1) as f64 / k as f64;
        }
        if k >= y {
            total += c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
        }
    }
    total
}

#[test]
fn rate_ratio_matches_direct_tail() {
    let mut r = SlRateRatioResult {
        p_one_sided: 0.0,
        p_two_sided: 0.0,
        p0: 0.0,
        conditional_n: 0,
    };
    let st = unsafe { sl_rate_ratio_test(4, 1.0, 6, 1.0, 1.0, SlTwoSidedMethod::Central, &mut r) };
    assert_eq!(st, SlStatus::Ok);
    assert_eq!(r.conditional_n, 10);
    assert_eq!(r.p0, 0.5);
    assert!((r.p_one_sided - tail(6, 10, 0.5)).abs() < 1e-14);
    assert!((r.p_one_sided - 386.0 / 1024.0).abs() < 1e-14);

    let st = unsafe { sl_rate_ratio_test(0, 4.0, 1, 1.0, 1.0, SlTwoSidedMethod::MinLikelihood, &mut r) };
    assert_eq!(st, SlStatus::Ok);
    assert!((r.p_one_sided - 0.2).abs() < 1e-15);
}

#[test]
fn domain_errors_set_message() {
    let mut r = SlRateRatioResult {
        p_one_sided: -1.0,
        p_two_sided: -1.0,
        p0: -1.0,
        conditional_n: 0,
    };
    sl_clear_error();
    assert!(sl_last_error_message().is_null());
    let st = unsafe { sl_rate_ratio_test(1, 0.0, 1, 1.0, 1.0, SlTwoSidedMethod::Central, &mut r) };
    assert_eq!(st, SlStatus::Domain);
    assert!(last_error().contains("exposure"));
    assert_eq!(r.p_one_sided, -1.0);

    let st = unsafe { sl_rate_ratio_test(1, 1.0, 1, 1.0, 1.0, SlTwoSidedMethod::Central, ptr::null_mut()) };
    assert_eq!(st, SlStatus::NullPointer);
    assert_eq!(last_error(), "out is null");

    let mut v = 0.0;
    assert_eq!(unsafe { sl_reg_inc_beta(1.0, 1.0, 1.5, &mut v) }, SlStatus::Domain);
    assert_eq!(unsafe { sl_binom_upper_tail(1, 2, -0.1, &mut v) }, SlStatus::Domain);
}

#[test]
fn special_functions() {
    let mut v = 0.0;
    assert_eq!(unsafe { sl_binom_upper_tail(3, 12, 0.3, &mut v) }, SlStatus::Ok);
    assert!((v - tail(3, 12, 0.3)).abs() < 1e-14);
    // I_x(1, b) = 1 - (1 - x)^b
    assert_eq!(unsafe { sl_reg_inc_beta(1.0, 3.0, 0.25, &mut v) }, SlStatus::Ok);
    assert!((v - (1.0 - 0.75f64.powi(3))).abs() < 1e-14);
}

#[test]
fn posterior_and_lookup() {
    let mut v = 0.0;
    let st = unsafe { sl_posterior_deterioration(1.0, 1.0, 0, 1.0, 0, 1.0, &mut v) };
    assert_eq!(st, SlStatus::Ok);
    assert!((v - 0.5).abs() < 1e-14);
    assert_eq!(unsafe { sl_posterior_deterioration(0.0, 1.0, 0, 1.0, 0, 1.0, &mut v) }, SlStatus::Domain);

    assert_eq!(unsafe { sl_posterior_table_lookup(0, 2, &mut v) }, SlStatus::Ok);
    assert_eq!(v, 0.88);
    assert_eq!(unsafe { sl_posterior_table_lookup(9, 9, &mut v) }, SlStatus::OutOfRange);
    assert!(last_error().contains("(9, 9)"));
}

#[test]
fn classification() {
    let mut c = SlCategory::NoDeterioration;
    assert_eq!(unsafe { sl_classify_p(0.1, 0.1, 0.25, &mut c) }, SlStatus::Ok);
    assert_eq!(c, SlCategory::ProbableDeterioration);
    assert_eq!(unsafe { sl_classify_p(0.2, 0.1, 0.25, &mut c) }, SlStatus::Ok);
    assert_eq!(c, SlCategory::PotentialDeterioration);
    assert_eq!(unsafe { sl_classify_p(0.377, 0.1, 0.25, &mut c) }, SlStatus::Ok);
    assert_eq!(c, SlCategory::NoDeterioration);
    assert_eq!(unsafe { sl_classify_p(0.2, 0.3, 0.25, &mut c) }, SlStatus::Domain);
    assert_eq!(unsafe { sl_classify_posterior(0.9, 0.9, 0.75, &mut c) }, SlStatus::Ok);
    assert_eq!(c, SlCategory::ProbableDeterioration);
    assert_eq!(unsafe { sl_classify_posterior(0.8, 0.9, 0.75, &mut c) }, SlStatus::Ok);
    assert_eq!(c, SlCategory::PotentialDeterioration);
}

#[test]
fn ptable_handle() {
    let mut t: *mut SlPTable = ptr::null_mut();
    assert_eq!(unsafe { sl_ptable_new(5, 7, 4.0, 1.0, &mut t) }, SlStatus::Ok);
    assert!(!t.is_null());
    let (mut rows, mut cols) = (0usize, 0usize);
    assert_eq!(unsafe { sl_ptable_dims(t, &mut rows, &mut cols) }, SlStatus::Ok);
    assert_eq!((rows, cols), (6, 8));
    let mut v = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            assert_eq!(unsafe { sl_ptable_get(t, i, j, &mut v) }, SlStatus::Ok);
            assert!((v - tail(j as u64, (i + j) as u64, 0.2)).abs() < 1e-13 || i + j == 0);
        }
    }
    assert_eq!(unsafe { sl_ptable_get(t, 6, 0, &mut v) }, SlStatus::OutOfRange);
    assert_eq!(unsafe { sl_ptable_get(ptr::null(), 0, 0, &mut v) }, SlStatus::NullPointer);
    unsafe { sl_ptable_free(t) };
    unsafe { sl_ptable_free(ptr::null_mut()) };

    assert_eq!(unsafe { sl_ptable_new(2, 2, -1.0, 1.0, &mut t) }, SlStatus::Domain);
    assert_eq!(unsafe { sl_ptable_new(20_000, 2, 1.0, 1.0, &mut t) }, SlStatus::InvalidArgument);
}

#[test]
fn study_handle_is_seeded_and_worker_independent() {
    let mut s: *mut SlStudy = ptr::null_mut();
    assert_eq!(unsafe { sl_study_new(1.0, 1.0, 3.0, 4.0, 1.0, 4000, &mut s) }, SlStatus::Ok);
    let zero = SlErrorRates {
        alpha_hat: 0.0,
        power_hat: 0.0,
        mc_stderr_alpha: 0.0,
        mc_stderr_power: 0.0,
        replications: 0,
    };
    let (mut a, mut b) = (zero, zero);
    assert_eq!(unsafe { sl_study_run(s, 5, 1, &mut a) }, SlStatus::Ok);
    assert_eq!(unsafe { sl_study_run(s, 5, 3, &mut b) }, SlStatus::Ok);
    assert_eq!(a, b);
    assert_eq!(a.replications, 4000);
    assert!(a.power_hat > a.alpha_hat);

    // same numbers as the library entry point on the power stream
    let direct = {
        let cfg = safelevel::simulate::ErrorRateStudy {
            procedure: safelevel::simulate::Procedure::RateRatioP(Default::default()),
            rate_ref: 1.0,
            rate_target_null: 1.0,
            rate_target_alt: 3.0,
            exposure_ref: 4.0,
            exposure_target: 1.0,
            decision_counted: Default::default(),
            replications: 4000,
        };
        estimate_error_rates(&cfg, &RandomStream::new(5, safelevel::cli::POWER_STREAM), 1).unwrap()
    };
    assert_eq!(a.alpha_hat, direct.alpha_hat);
    assert_eq!(a.power_hat, direct.power_hat);

    let mut c = zero;
    assert_eq!(unsafe { sl_study_count_potential(s, true) }, SlStatus::Ok);
    assert_eq!(unsafe { sl_study_run(s, 5, 1, &mut c) }, SlStatus::Ok);
    assert!(c.alpha_hat >= a.alpha_hat);

    assert_eq!(unsafe { sl_study_use_posterior_table(s, 0.9, 0.75) }, SlStatus::Ok);
    assert_eq!(unsafe { sl_study_run(s, 5, 1, &mut c) }, SlStatus::Ok);
    assert_eq!(unsafe { sl_study_use_rate_ratio(s, 0.5, 0.25) }, SlStatus::Domain);
    unsafe { sl_study_free(s) };

    assert_eq!(unsafe { sl_study_new(-1.0, 1.0, 1.0, 1.0, 1.0, 10, &mut s) }, SlStatus::Domain);
    assert_eq!(unsafe { sl_study_new(1.0, 1.0, 1.0, 1.0, 1.0, 0, &mut s) }, SlStatus::Domain);
    assert_eq!(unsafe { sl_study_run(ptr::null(), 1, 1, &mut c) }, SlStatus::NullPointer);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(sl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
