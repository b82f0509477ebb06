use std::ffi::CStr;
use std::ptr;

use crf_ffi::*;

fn last_error() -> String {
    let p = crf_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn dataset_round_trip_and_prediction() {
    unsafe {
        let beta = [3.0, 2.0];
        let mut beta0 = 0.0;
        assert_eq!(crf_calibrate_intercept(0.1, beta.as_ptr(), 2, &mut beta0), CrfStatus::Ok);
        assert!((beta0 - -5.0964294).abs() < 1e-6);

        let mut ds = ptr::null_mut();
        assert_eq!(crf_dataset_generate_logistic(beta0, beta.as_ptr(), 2, 1000, 7, &mut ds), CrfStatus::Ok);
        assert_eq!(crf_dataset_len(ds), 1000);
        assert_eq!(crf_dataset_dim(ds), 2);
        let (mut n0, mut n1) = (0, 0);
        assert_eq!(crf_dataset_class_counts(ds, &mut n0, &mut n1), CrfStatus::Ok);
        assert_eq!(n0 + n1, 1000);

        let x = [0.7, 0.7];
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(crf_forest_predict(ds, 100, 500, 6, x.as_ptr(), 1, &mut a), CrfStatus::Ok);
        assert_eq!(crf_forest_predict(ds, 100, 500, 6, x.as_ptr(), 1, &mut b), CrfStatus::Ok);
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a));

        let mut rb = 0.0;
        let status = crf_rb_forest_predict(ds, 100, 500, 4, 0.5, n1, CrfRebalanceMode::PerSubsampleFraction, x.as_ptr(), 1, &mut rb);
        assert_eq!(status, CrfStatus::Ok);
        let mut debiased = 0.0;
        assert_eq!(crf_is_debias(rb, n0, n1, 0.5, &mut debiased), CrfStatus::Ok);
        assert!(debiased <= rb);
        crf_dataset_free(ds);
    }
}

#[test]
fn explicit_dataset_and_errors() {
    unsafe {
        let features = [0.1, 0.2, 0.9, 0.8];
        let labels = [0u8, 1];
        let mut ds = ptr::null_mut();
        assert_eq!(crf_dataset_new(2, features.as_ptr(), labels.as_ptr(), 2, &mut ds), CrfStatus::Ok);
        let mut v = 0.0;
        let x = [0.95, 0.95];
        assert_eq!(crf_forest_predict(ds, 10, 2, 1, x.as_ptr(), 3, &mut v), CrfStatus::Ok);
        assert_eq!(crf_forest_predict(ds, 10, 5, 1, x.as_ptr(), 3, &mut v), CrfStatus::InvalidConfig);
        assert!(last_error().contains("invalid configuration"));
        crf_dataset_free(ds);

        let bad = [0u8, 2];
        let mut other = ptr::null_mut();
        assert_eq!(crf_dataset_new(2, features.as_ptr(), bad.as_ptr(), 2, &mut other), CrfStatus::InvalidInput);
        assert!(other.is_null());
        assert_eq!(crf_forest_predict(ptr::null(), 10, 2, 1, x.as_ptr(), 3, &mut v), CrfStatus::NullPointer);
        assert!(last_error().contains("dataset"));
        crf_dataset_free(ptr::null_mut());
    }
}

#[test]
fn oracle_wrappers() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(crf_inverse_binomial_moment(2, 0.5, &mut v), CrfStatus::Ok);
        assert_eq!(v, 7.0 / 12.0);
        let mut se = 1.0;
        assert_eq!(crf_kernel_second_moment(2, 2, CrfKernelMode::ExactD2, 0, 0, &mut v, &mut se), CrfStatus::Ok);
        assert_eq!((v, se), (0.1640625, 0.0));
        assert_eq!(
            crf_kernel_second_moment(8, 40, CrfKernelMode::Enumeration, u64::MAX, 0, &mut v, &mut se),
            CrfStatus::BudgetExceeded
        );
        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(crf_cd_bounds(3, &mut lo, &mut hi), CrfStatus::Ok);
        assert!(lo < hi);
        assert_eq!(crf_constant_cd(3, 20_000, 1, &mut v, &mut se), CrfStatus::Ok);
        assert!(v + 3.0 * se >= lo && v - 3.0 * se <= hi);
        assert_eq!(crf_diameter_moment_bound(2, 4, 3, &mut v), CrfStatus::InvalidInput);
        let mut diag = CrfRateDiagnostics::default();
        assert_eq!(crf_check_rate_conditions(1 << 20, 1 << 10, 10, 2, &mut diag), CrfStatus::Ok);
        assert!((diag.g1_ratio - 0.1).abs() < 1e-15);
        let mu = crf_mu_prime_of_mu(0.17, 0.1, 0.5);
        assert!((crf_mu_of_mu_prime(mu, 0.1, 0.5) - 0.17).abs() < 1e-12);
    }
}
