//! C interface. Every fallible function returns a [`CrfStatus`]; on failure
//! the message is kept per thread and read with [`crf_last_error_message`].
//! Datasets cross the boundary as opaque [`CrfDataset`] handles that the
//! caller releases with [`crf_dataset_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use crf::oracles::{self, InverseMomentOrder, KernelMode};
use crf::{Dataset, DebiasInputs, Error, ForestConfig, LogisticScenario, PredictOptions, RebalanceMode, RebalanceSpec, Stream};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    InvalidInput = 3,
    DepthOverflow = 4,
    SamplingInfeasible = 5,
    NonConvergence = 6,
    BudgetExceeded = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrfRebalanceMode {
    /// One rebalanced sample, subsampled per tree.
    Dataset = 0,
    /// Stratified per-tree subsamples.
    PerSubsampleFraction = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrfKernelMode {
    ExactD2 = 0,
    Enumeration = 1,
    MonteCarlo = 2,
}

/// Growth-condition diagnostics for `(n, s, k, d)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CrfRateDiagnostics {
    pub g1_ratio: f64,
    pub cond1_ratio: f64,
    pub cond2_ratio: f64,
    pub alpha_limit: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

/// Opaque labelled dataset in `[0,1]^d`.
pub struct CrfDataset {
    inner: Dataset,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> CrfStatus {
    match err {
        Error::InvalidConfig(_) => CrfStatus::InvalidConfig,
        Error::InvalidInput(_) => CrfStatus::InvalidInput,
        Error::DepthOverflow { .. } => CrfStatus::DepthOverflow,
        Error::SamplingInfeasible { .. } => CrfStatus::SamplingInfeasible,
        Error::NonConvergence { .. } => CrfStatus::NonConvergence,
        Error::BudgetExceeded { .. } => CrfStatus::BudgetExceeded,
        Error::Io(_) | Error::Json(_) => CrfStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CrfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CrfStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            CrfStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            CrfStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn dataset_ref<'a>(p: *const CrfDataset) -> Result<&'a Dataset, Failure> {
    p.as_ref().map(|d| &d.inner).ok_or(Failure::Null("dataset"))
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn crf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Build a dataset from `n` row-major points of dimension `d` and 0/1 labels.
#[no_mangle]
pub unsafe extern "C" fn crf_dataset_new(
    d: usize,
    features: *const f64,
    labels: *const u8,
    n: usize,
    out_dataset: *mut *mut CrfDataset,
) -> CrfStatus {
    guard(|| {
        let slot = out(out_dataset, "out_dataset")?;
        let x = input(features, n.saturating_mul(d), "features")?.to_vec();
        let y = input(labels, n, "labels")?.to_vec();
        let inner = Dataset::new(d, x, y)?;
        *slot = Box::into_raw(Box::new(CrfDataset { inner }));
        Ok(())
    })
}

/// Draw `n` points from the logistic model `P(Y=1|x) = 1/(1+exp(-(beta0 + beta.x)))`
/// with uniform features on `[0,1]^d`.
#[no_mangle]
pub unsafe extern "C" fn crf_dataset_generate_logistic(
    beta0: f64,
    beta: *const f64,
    d: usize,
    n: usize,
    seed: u64,
    out_dataset: *mut *mut CrfDataset,
) -> CrfStatus {
    guard(|| {
        let slot = out(out_dataset, "out_dataset")?;
        let scenario = LogisticScenario::new(beta0, input(beta, d, "beta")?.to_vec())?;
        let inner = crf::generate_logistic_dataset(&scenario, n, Stream::new(seed))?;
        *slot = Box::into_raw(Box::new(CrfDataset { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn crf_dataset_free(dataset: *mut CrfDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of points; 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn crf_dataset_len(dataset: *const CrfDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.n())
}

/// Feature dimension; 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn crf_dataset_dim(dataset: *const CrfDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.d())
}

#[no_mangle]
pub unsafe extern "C" fn crf_dataset_class_counts(dataset: *const CrfDataset, n0: *mut usize, n1: *mut usize) -> CrfStatus {
    guard(|| {
        let (a, b) = dataset_ref(dataset)?.class_counts();
        *out(n0, "n0")? = a;
        *out(n1, "n1")? = b;
        Ok(())
    })
}

/// Intercept giving class probability `target_p` for slopes `beta`.
#[no_mangle]
pub unsafe extern "C" fn crf_calibrate_intercept(target_p: f64, beta: *const f64, d: usize, out_beta0: *mut f64) -> CrfStatus {
    guard(|| {
        let slot = out(out_beta0, "out_beta0")?;
        *slot = crf::calibrate_intercept(target_p, input(beta, d, "beta")?, crf::data::CALIBRATION_TOL)?;
        Ok(())
    })
}

/// Forest of `trees` centered trees of depth `depth`, each on a uniform
/// subsample of `subsample` rows, evaluated at `x` (length `d`).
#[no_mangle]
pub unsafe extern "C" fn crf_forest_predict(
    dataset: *const CrfDataset,
    trees: usize,
    subsample: usize,
    depth: u32,
    x: *const f64,
    seed: u64,
    out_value: *mut f64,
) -> CrfStatus {
    guard(|| {
        let data = dataset_ref(dataset)?;
        let slot = out(out_value, "out_value")?;
        let point = input(x, data.d(), "x")?;
        let config = ForestConfig::new(trees, subsample, depth);
        *slot = crf::forest_predict(&config, data, point, Stream::new(seed))?.value;
        Ok(())
    })
}

/// Rebalanced forest at `x`; estimates the rebalanced regression function.
/// `n_prime` is the rebalanced sample size in dataset mode.
#[no_mangle]
pub unsafe extern "C" fn crf_rb_forest_predict(
    dataset: *const CrfDataset,
    trees: usize,
    subsample: usize,
    depth: u32,
    p_prime: f64,
    n_prime: usize,
    mode: CrfRebalanceMode,
    x: *const f64,
    seed: u64,
    out_value: *mut f64,
) -> CrfStatus {
    guard(|| {
        let data = dataset_ref(dataset)?;
        let slot = out(out_value, "out_value")?;
        let point = input(x, data.d(), "x")?;
        let spec = RebalanceSpec::new(p_prime, n_prime)?;
        let mode = match mode {
            CrfRebalanceMode::Dataset => RebalanceMode::Dataset,
            CrfRebalanceMode::PerSubsampleFraction => RebalanceMode::PerSubsampleFraction,
        };
        let config = ForestConfig::new(trees, subsample, depth);
        *slot = crf::rb_forest_predict(&config, data, &spec, mode, point, Stream::new(seed), PredictOptions::default())?.value;
        Ok(())
    })
}

/// Importance-sampling correction of a rebalanced prediction.
#[no_mangle]
pub unsafe extern "C" fn crf_is_debias(mu_rb: f64, n0: usize, n1: usize, p_prime: f64, out_value: *mut f64) -> CrfStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = crf::is_debias(DebiasInputs { mu_rb, n0, n1, p_prime })?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn crf_mu_prime_of_mu(mu: f64, p: f64, p_prime: f64) -> f64 {
    oracles::mu_prime_of_mu(mu, p, p_prime)
}

#[no_mangle]
pub extern "C" fn crf_mu_of_mu_prime(mu_prime: f64, p: f64, p_prime: f64) -> f64 {
    oracles::mu_of_mu_prime(mu_prime, p, p_prime)
}

#[no_mangle]
pub unsafe extern "C" fn crf_cd_bounds(d: usize, lower: *mut f64, upper: *mut f64) -> CrfStatus {
    guard(|| {
        let (lo, hi) = oracles::cd_bounds(d)?;
        *out(lower, "lower")? = lo;
        *out(upper, "upper")? = hi;
        Ok(())
    })
}

/// Monte Carlo estimate of the limiting variance constant `C(d)`.
#[no_mangle]
pub unsafe extern "C" fn crf_constant_cd(d: usize, samples: usize, seed: u64, value: *mut f64, std_error: *mut f64) -> CrfStatus {
    guard(|| {
        let r = oracles::constant_cd(d, samples, Stream::new(seed))?;
        *out(value, "value")? = r.value;
        *out(std_error, "std_error")? = r.std_error;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn crf_kernel_second_moment(
    d: usize,
    k: u32,
    mode: CrfKernelMode,
    budget: u64,
    seed: u64,
    value: *mut f64,
    std_error: *mut f64,
) -> CrfStatus {
    guard(|| {
        let mode = match mode {
            CrfKernelMode::ExactD2 => KernelMode::ExactD2,
            CrfKernelMode::Enumeration => KernelMode::Enumeration,
            CrfKernelMode::MonteCarlo => KernelMode::MonteCarlo,
        };
        let r = oracles::kernel_second_moment(d, k, mode, budget, Stream::new(seed))?;
        *out(value, "value")? = r.value;
        *out(std_error, "std_error")? = r.std_error;
        Ok(())
    })
}

/// `E[1/(1+Z)]` for `Z ~ Binomial(n, p)`.
#[no_mangle]
pub unsafe extern "C" fn crf_inverse_binomial_moment(n: u64, p: f64, value: *mut f64) -> CrfStatus {
    guard(|| {
        *out(value, "value")? = oracles::inverse_binomial_moment(n, p, InverseMomentOrder::FirstExact)?.value;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn crf_diameter_moment_bound(d: usize, k: u32, order: u8, value: *mut f64) -> CrfStatus {
    guard(|| {
        *out(value, "value")? = oracles::diameter_moment_bound(d, k, order)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn crf_check_rate_conditions(
    n: usize,
    s: usize,
    k: u32,
    d: usize,
    diagnostics: *mut CrfRateDiagnostics,
) -> CrfStatus {
    guard(|| {
        let slot = out(diagnostics, "diagnostics")?;
        let r = oracles::check_rate_conditions(n, s, k, d)?;
        *slot = CrfRateDiagnostics {
            g1_ratio: r.g1_ratio,
            cond1_ratio: r.cond1_ratio,
            cond2_ratio: r.cond2_ratio,
            alpha_limit: r.alpha_limit,
            alpha1: r.alpha1,
            alpha2: r.alpha2,
        };
        Ok(())
    })
}
