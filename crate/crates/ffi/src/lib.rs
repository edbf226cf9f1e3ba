//! C ABI over the `fairmix` library.
//!
//! Datasets and classifier lists live behind opaque handles that the caller
//! frees with the matching `*_free` function. Every fallible call returns an
//! [`FmStatus`]; on failure `fm_last_error` gives a message for the calling
//! thread. Metric arguments are `uint32_t` values of [`FmMetric`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fairmix::classifiers::load_prediction_matrix;
use fairmix::metrics::{self, MetricKind};
use fairmix::optimizer::{solve_fair_mixture, Objective, SolveStatus};
use fairmix::{Classifier, Dataset, Ensemble, Error, Scenario, Sensitive};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Infeasible = 5,
    Unbounded = 6,
    BufferTooSmall = 7,
    Undefined = 8,
    Panic = 9,
}

#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmMetric {
    AcceptanceRate = 0,
    Tpr = 1,
    Tnr = 2,
    Ppv = 3,
    Npv = 4,
}

/// Opaque dataset handle.
pub struct FmDataset(Dataset);

/// Opaque list of classifiers.
pub struct FmClassifiers(Vec<Classifier>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let msg = CString::new(message.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> FmStatus {
    match err {
        Error::Io { .. } => FmStatus::Io,
        Error::Csv { .. }
        | Error::InvalidLabel { .. }
        | Error::InvalidSensitive { .. }
        | Error::Header(_)
        | Error::Json(_) => FmStatus::Parse,
        Error::UndefinedMetric { .. } => FmStatus::Undefined,
        _ => FmStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> FmStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn guard(f: impl FnOnce() -> FmStatus) -> FmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("panic inside fairmix");
            FmStatus::Panic
        }
    }
}

fn metric_kind(raw: u32) -> Option<MetricKind> {
    Some(match raw {
        0 => MetricKind::AcceptanceRate,
        1 => MetricKind::Tpr,
        2 => MetricKind::Tnr,
        3 => MetricKind::Ppv,
        4 => MetricKind::Npv,
        _ => return None,
    })
}

fn sensitive(raw: u8) -> Option<Sensitive> {
    Sensitive::try_from(raw).ok()
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, FmStatus> {
    if path.is_null() {
        set_error("path is NULL");
        return Err(FmStatus::NullPointer);
    }
    CStr::from_ptr(path).to_str().map_err(|_| {
        set_error("path is not valid UTF-8");
        FmStatus::InvalidArgument
    })
}

unsafe fn weights_arg<'a>(weights: *const f64, len: usize) -> Result<&'a [f64], FmStatus> {
    if weights.is_null() {
        set_error("weights is NULL");
        return Err(FmStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(weights, len))
}

unsafe fn ensemble_arg(
    members: *const FmClassifiers,
    weights: *const f64,
    len: usize,
) -> Result<Ensemble, FmStatus> {
    if members.is_null() {
        set_error("members is NULL");
        return Err(FmStatus::NullPointer);
    }
    let w = weights_arg(weights, len)?;
    Ensemble::new((*members).0.clone(), w.to_vec()).map_err(fail)
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            set_error(concat!(stringify!($p), " is NULL"));
            return FmStatus::NullPointer;
        })+
    };
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message for the last failed call on this thread. Valid until the next
/// fairmix call on the same thread; never NULL.
#[no_mangle]
pub extern "C" fn fm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a `f_1,...,f_d,y,z` CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_dataset_load(path: *const c_char, out: *mut *mut FmDataset) -> FmStatus {
    guard(|| {
        non_null!(out);
        let path = tri!(path_arg(path));
        match Dataset::load_csv(path) {
            Ok(d) => {
                *out = Box::into_raw(Box::new(FmDataset(d)));
                FmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `dataset` must come from this library and not have been freed. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn fm_dataset_free(dataset: *mut FmDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of instances, or 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fm_dataset_len(dataset: *const FmDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fm_dataset_dimension(dataset: *const FmDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.dimension())
}

/// Loads a `clf_1,...,clf_M` prediction matrix bound to `dataset`.
///
/// # Safety
/// `path` must be a NUL-terminated string, `dataset` a live handle and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_classifiers_load(
    path: *const c_char,
    dataset: *const FmDataset,
    out: *mut *mut FmClassifiers,
) -> FmStatus {
    guard(|| {
        non_null!(dataset, out);
        let path = tri!(path_arg(path));
        match load_prediction_matrix(path, &(*dataset).0) {
            Ok(tables) => {
                let list = tables.into_iter().map(Classifier::from).collect();
                *out = Box::into_raw(Box::new(FmClassifiers(list)));
                FmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `classifiers` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fm_classifiers_free(classifiers: *mut FmClassifiers) {
    if !classifiers.is_null() {
        drop(Box::from_raw(classifiers));
    }
}

/// # Safety
/// `classifiers` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fm_classifiers_len(classifiers: *const FmClassifiers) -> usize {
    classifiers.as_ref().map_or(0, |c| c.0.len())
}

/// Builds reference scenario `figure` (1 to 4). Its prescribed weights are
/// copied into `out_weights` (capacity `weights_capacity`), and their count is
/// written to `out_weights_len` even when the buffer is too small.
///
/// # Safety
/// All output pointers must be valid; `out_weights` must hold
/// `weights_capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn fm_scenario_new(
    figure: u8,
    out_dataset: *mut *mut FmDataset,
    out_members: *mut *mut FmClassifiers,
    out_weights: *mut f64,
    weights_capacity: usize,
    out_weights_len: *mut usize,
) -> FmStatus {
    guard(|| {
        non_null!(out_dataset, out_members, out_weights, out_weights_len);
        let s = match Scenario::by_number(figure) {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        *out_weights_len = s.prescribed_weights.len();
        if weights_capacity < s.prescribed_weights.len() {
            set_error("weights buffer too small");
            return FmStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(s.prescribed_weights.as_ptr(), out_weights, s.prescribed_weights.len());
        *out_dataset = Box::into_raw(Box::new(FmDataset(s.dataset)));
        *out_members = Box::into_raw(Box::new(FmClassifiers(s.members)));
        FmStatus::Ok
    })
}

/// Group rate of one member. `*out_defined` is false when the conditioning
/// set is empty, in which case `*out_value` is NaN.
///
/// # Safety
/// Handles must be live; output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn fm_group_rate(
    dataset: *const FmDataset,
    members: *const FmClassifiers,
    member: usize,
    metric: u32,
    z: u8,
    out_value: *mut f64,
    out_defined: *mut bool,
) -> FmStatus {
    guard(|| {
        non_null!(dataset, members, out_value, out_defined);
        let (Some(kind), Some(z)) = (metric_kind(metric), sensitive(z)) else {
            set_error("invalid metric or sensitive value");
            return FmStatus::InvalidArgument;
        };
        let members = &*members;
        let Some(c) = members.0.get(member) else {
            set_error(format!("member {member} out of range"));
            return FmStatus::InvalidArgument;
        };
        let d = &(*dataset).0;
        let rate = match c.predict_all(d).and_then(|p| metrics::group_rate(kind, &p, d, z)) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        *out_defined = rate.is_some();
        *out_value = rate.unwrap_or(f64::NAN);
        FmStatus::Ok
    })
}

/// Group rate of the ensemble with the given weights.
///
/// # Safety
/// Handles must be live; `weights` must hold `weights_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fm_ensemble_group_rate(
    dataset: *const FmDataset,
    members: *const FmClassifiers,
    weights: *const f64,
    weights_len: usize,
    metric: u32,
    z: u8,
    out_value: *mut f64,
    out_defined: *mut bool,
) -> FmStatus {
    guard(|| {
        non_null!(dataset, out_value, out_defined);
        let (Some(kind), Some(z)) = (metric_kind(metric), sensitive(z)) else {
            set_error("invalid metric or sensitive value");
            return FmStatus::InvalidArgument;
        };
        let ens = tri!(ensemble_arg(members, weights, weights_len));
        match ens.group_rate(kind, &(*dataset).0, z) {
            Ok(rate) => {
                *out_defined = rate.is_some();
                *out_value = rate.unwrap_or(f64::NAN);
                FmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// Handles must be live; `weights` must hold `weights_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fm_ensemble_accuracy(
    dataset: *const FmDataset,
    members: *const FmClassifiers,
    weights: *const f64,
    weights_len: usize,
    out_accuracy: *mut f64,
) -> FmStatus {
    guard(|| {
        non_null!(dataset, out_accuracy);
        let ens = tri!(ensemble_arg(members, weights, weights_len));
        match ens.accuracy(&(*dataset).0) {
            Ok(a) => {
                *out_accuracy = a;
                FmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Per-instance probability of the positive outcome. Writes the dataset size
/// to `out_len` even when `capacity` is too small.
///
/// # Safety
/// Handles must be live; `out_q` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn fm_acceptance_probability(
    dataset: *const FmDataset,
    members: *const FmClassifiers,
    weights: *const f64,
    weights_len: usize,
    out_q: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> FmStatus {
    guard(|| {
        non_null!(dataset, out_q, out_len);
        let ens = tri!(ensemble_arg(members, weights, weights_len));
        let profile = match ens.acceptance_probability(&(*dataset).0) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        *out_len = profile.q.len();
        if capacity < profile.q.len() {
            set_error("output buffer too small");
            return FmStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(profile.q.as_ptr(), out_q, profile.q.len());
        FmStatus::Ok
    })
}

/// Solves for mixture weights with every listed metric's gap in
/// `[-tolerance, tolerance]`, maximizing accuracy when `maximize_accuracy`.
/// Returns `FM_STATUS_INFEASIBLE` when no mixture qualifies.
///
/// # Safety
/// Handles must be live; `metrics` must hold `n_metrics` values,
/// `out_weights` must hold `capacity` doubles; `out_accuracy` valid.
#[no_mangle]
pub unsafe extern "C" fn fm_solve_fair_mixture(
    dataset: *const FmDataset,
    members: *const FmClassifiers,
    metrics: *const u32,
    n_metrics: usize,
    tolerance: f64,
    maximize_accuracy: bool,
    out_weights: *mut f64,
    capacity: usize,
    out_accuracy: *mut f64,
) -> FmStatus {
    guard(|| {
        non_null!(dataset, members, out_weights, out_accuracy);
        if n_metrics > 0 && metrics.is_null() {
            set_error("metrics is NULL");
            return FmStatus::NullPointer;
        }
        let raw = if n_metrics == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(metrics, n_metrics)
        };
        let Some(kinds) = raw.iter().map(|&m| metric_kind(m)).collect::<Option<Vec<_>>>() else {
            set_error("invalid metric");
            return FmStatus::InvalidArgument;
        };
        let members = &(*members).0;
        if capacity < members.len() {
            set_error("weights buffer too small");
            return FmStatus::BufferTooSmall;
        }
        let objective = if maximize_accuracy {
            Objective::MaxAccuracy
        } else {
            Objective::FeasibilityOnly
        };
        let sol = match solve_fair_mixture(members, &(*dataset).0, &kinds, tolerance, objective) {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        match sol.status {
            SolveStatus::Optimal => {
                ptr::copy_nonoverlapping(sol.weights.as_ptr(), out_weights, sol.weights.len());
                *out_accuracy = sol.accuracy.unwrap_or(f64::NAN);
                FmStatus::Ok
            }
            SolveStatus::Infeasible => {
                set_error("no mixture satisfies the constraints");
                FmStatus::Infeasible
            }
            SolveStatus::Unbounded => {
                set_error("linear program is unbounded");
                FmStatus::Unbounded
            }
        }
    })
}

/// Fairness report as canonical JSON: the ensemble report when `weights` is
/// non-NULL, otherwise a list of per-classifier reports. Returns NULL on
/// failure; free the result with `fm_string_free`.
///
/// # Safety
/// Handles must be live; `weights` is NULL or holds `weights_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fm_audit_json(
    dataset: *const FmDataset,
    members: *const FmClassifiers,
    weights: *const f64,
    weights_len: usize,
    tolerance: f64,
) -> *mut c_char {
    let result = catch_unwind(AssertUnwindSafe(|| -> Option<String> {
        if dataset.is_null() || members.is_null() {
            set_error("dataset or members is NULL");
            return None;
        }
        let d = &(*dataset).0;
        let text = if weights.is_null() {
            fairmix::cli::named_audit_reports(d, &(*members).0, tolerance)
                .and_then(|r| fairmix::cli::classifiers_document(&r))
                .and_then(|v| fairmix::json::to_string(&v))
        } else {
            let ens = ensemble_arg(members, weights, weights_len).ok()?;
            ens.audit(d, tolerance).and_then(|r| fairmix::json::to_string(&r))
        };
        match text {
            Ok(t) => Some(t),
            Err(e) => {
                fail(e);
                None
            }
        }
    }));
    match result {
        Ok(Some(text)) => CString::new(text).map_or(ptr::null_mut(), CString::into_raw),
        Ok(None) => ptr::null_mut(),
        Err(_) => {
            set_error("panic inside fairmix");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
