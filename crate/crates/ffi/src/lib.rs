//! C ABI over the qfusion library: opaque circuit handles, integer
//! status codes, and a thread-local last-error message. Strings
//! returned through `char **` out-parameters are owned by the caller
//! and must be released with `qf_string_free`; the pointer returned by
//! `qf_last_error` stays valid until the next failing call on the same
//! thread.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{CStr, CString};
use std::fmt::Display;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::c_char;

use qfusion::circuit::{self, Circuit};
use qfusion::distill::{
    greedy_nesting, quadratic_amortized_ratio, threshold_scan, xdetect_map, zdetect_map,
    BlockKind, BlockResult, ErrorDistribution, NoiseModel,
};
use qfusion::identities;
use qfusion::transpile;

/// Result of every fallible call; `qf_last_error` carries the detail.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum QfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    SimulationError = 5,
    TranspileError = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let owned = CString::new(message)
        .unwrap_or_else(|_| CString::new("error message contained NUL").expect("literal"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(owned));
}

fn fail(status: QfStatus, message: impl Display) -> QfStatus {
    set_error(message.to_string());
    status
}

fn guarded<F: FnOnce() -> QfStatus>(f: F) -> QfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".to_string());
            QfStatus::Panic
        }
    }
}

/// Hands `text` to the caller as a malloc-style C string via `out`.
unsafe fn give_string(text: String, out: *mut *mut c_char) -> QfStatus {
    match CString::new(text) {
        Ok(s) => {
            *out = s.into_raw();
            QfStatus::Ok
        }
        Err(e) => fail(QfStatus::InvalidArgument, e),
    }
}

/// Opaque handle to a parsed circuit.
pub struct QfCircuit {
    inner: Circuit,
}

/// Gadget counts and resource-state accounting for a circuit.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct QfResourceReport {
    pub t_count: u64,
    pub cs_count: u64,
    pub toffoli_count: u64,
    pub f_states_used: u64,
    pub t_states_equivalent: u64,
    pub gadget_depth: u64,
}

/// Outcome of running the identity registry.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct QfVerifySummary {
    pub total: u64,
    pub failed: u64,
    pub max_deviation: f64,
}

/// Probabilities of the four twirled error classes (I, X2, Z2, X2Z2).
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct QfErrorDistribution {
    pub p_i: f64,
    pub p_x: f64,
    pub p_z: f64,
    pub p_xz: f64,
}

/// Postselected output of a detection block; `output` is meaningful
/// only when `has_output` is set.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct QfBlockResult {
    pub accept_probability: f64,
    pub has_output: bool,
    pub output: QfErrorDistribution,
}

/// Summary of a greedy nesting schedule.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct QfNestingSummary {
    pub rounds: u64,
    pub converged: bool,
    pub diverged: bool,
    pub raw_per_output: f64,
    pub final_distribution: QfErrorDistribution,
}

fn dist_out(d: &ErrorDistribution) -> QfErrorDistribution {
    QfErrorDistribution {
        p_i: d.p_i,
        p_x: d.p_x,
        p_z: d.p_z,
        p_xz: d.p_xz,
    }
}

fn dist_in(d: &QfErrorDistribution) -> Result<ErrorDistribution, QfStatus> {
    ErrorDistribution::new(d.p_i, d.p_x, d.p_z, d.p_xz)
        .map_err(|e| fail(QfStatus::InvalidArgument, e))
}

fn block_out(r: &BlockResult) -> QfBlockResult {
    QfBlockResult {
        accept_probability: r.accept_probability,
        has_output: r.output.is_some(),
        output: r
            .output
            .as_ref()
            .map(dist_out)
            .unwrap_or(QfErrorDistribution {
                p_i: 0.0,
                p_x: 0.0,
                p_z: 0.0,
                p_xz: 0.0,
            }),
    }
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn qf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on this thread, or null
/// if no call has failed yet. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn qf_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |s| s.as_ptr())
    })
}

/// Parses circuit JSON into a handle.
///
/// # Safety
/// `json` must point to a NUL-terminated string and `out` must be valid
/// for writes; on success the caller owns the handle and must release
/// it with `qf_circuit_free`.
#[no_mangle]
pub unsafe extern "C" fn qf_circuit_parse(
    json: *const c_char,
    out: *mut *mut QfCircuit,
) -> QfStatus {
    guarded(|| {
        if json.is_null() || out.is_null() {
            return fail(QfStatus::NullPointer, "null argument");
        }
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(e) => return fail(QfStatus::InvalidUtf8, e),
        };
        match circuit::parse(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(QfCircuit { inner }));
                QfStatus::Ok
            }
            Err(e) => fail(QfStatus::ParseError, e),
        }
    })
}

/// Releases a circuit handle; null is a no-op.
///
/// # Safety
/// `handle` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qf_circuit_free(handle: *mut QfCircuit) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Releases a string returned through a `char **` out-parameter; null
/// is a no-op.
///
/// # Safety
/// `text` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qf_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Serializes the circuit back to JSON.
///
/// # Safety
/// `handle` must be a live circuit handle and `out` valid for writes;
/// the returned string must be released with `qf_string_free`.
#[no_mangle]
pub unsafe extern "C" fn qf_circuit_to_json(
    handle: *const QfCircuit,
    out: *mut *mut c_char,
) -> QfStatus {
    guarded(|| {
        if handle.is_null() || out.is_null() {
            return fail(QfStatus::NullPointer, "null argument");
        }
        give_string(circuit::serialize(&(*handle).inner), out)
    })
}

/// Number of wires the circuit declares.
///
/// # Safety
/// `handle` must be a live circuit handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qf_circuit_wire_count(
    handle: *const QfCircuit,
    out: *mut u64,
) -> QfStatus {
    guarded(|| {
        if handle.is_null() || out.is_null() {
            return fail(QfStatus::NullPointer, "null argument");
        }
        *out = (*handle).inner.wires.len() as u64;
        QfStatus::Ok
    })
}

/// Resource accounting for a qubit-only circuit.
///
/// # Safety
/// `handle` must be a live circuit handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qf_circuit_resources(
    handle: *const QfCircuit,
    out: *mut QfResourceReport,
) -> QfStatus {
    guarded(|| {
        if handle.is_null() || out.is_null() {
            return fail(QfStatus::NullPointer, "null argument");
        }
        let c = &(*handle).inner;
        let counts = match transpile::count_resources(c) {
            Ok(r) => r,
            Err(e) => return fail(QfStatus::TranspileError, e),
        };
        let depth = match transpile::gadget_depth(c) {
            Ok(d) => d,
            Err(e) => return fail(QfStatus::TranspileError, e),
        };
        *out = QfResourceReport {
            t_count: counts.t_count as u64,
            cs_count: counts.cs_count as u64,
            toffoli_count: counts.toffoli_count as u64,
            f_states_used: counts.f_states_used as u64,
            t_states_equivalent: counts.t_states_equivalent as u64,
            gadget_depth: depth as u64,
        };
        QfStatus::Ok
    })
}

/// Rewrites every T, CS, and CCX gate into a resource-state gadget.
///
/// # Safety
/// `handle` must be a live circuit handle and `out` valid for writes;
/// on success the caller owns the new handle.
#[no_mangle]
pub unsafe extern "C" fn qf_circuit_recompile(
    handle: *const QfCircuit,
    out: *mut *mut QfCircuit,
) -> QfStatus {
    guarded(|| {
        if handle.is_null() || out.is_null() {
            return fail(QfStatus::NullPointer, "null argument");
        }
        match transpile::recompile(&(*handle).inner) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(QfCircuit { inner }));
                QfStatus::Ok
            }
            Err(e) => fail(QfStatus::TranspileError, e),
        }
    })
}

/// Samples the circuit's classical outputs and returns `outcome,count`
/// CSV rows sorted by outcome. Shots are drawn from counter-keyed
/// streams, so a fixed seed reproduces the histogram exactly.
///
/// # Safety
/// `handle` must be a live circuit handle and `out` valid for writes;
/// the returned string must be released with `qf_string_free`.
#[no_mangle]
pub unsafe extern "C" fn qf_circuit_sample(
    handle: *const QfCircuit,
    shots: u64,
    seed: u64,
    out: *mut *mut c_char,
) -> QfStatus {
    guarded(|| {
        if handle.is_null() || out.is_null() {
            return fail(QfStatus::NullPointer, "null argument");
        }
        let hist = match circuit::sample(&(*handle).inner, shots, seed, &BTreeMap::new()) {
            Ok(h) => h,
            Err(e) => return fail(QfStatus::SimulationError, e),
        };
        let mut text = String::new();
        for (label, count) in &hist {
            text.push_str(&format!("{label},{count}\n"));
        }
        give_string(text, out)
    })
}

/// Runs every identity whose case id starts with `prefix` (null or
/// empty selects the whole registry) and summarizes the outcome.
///
/// # Safety
/// `prefix` must be null or a NUL-terminated string; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qf_verify_identities(
    prefix: *const c_char,
    out: *mut QfVerifySummary,
) -> QfStatus {
    guarded(|| {
        if out.is_null() {
            return fail(QfStatus::NullPointer, "null argument");
        }
        let filter = if prefix.is_null() {
            ""
        } else {
            match CStr::from_ptr(prefix).to_str() {
                Ok(t) => t,
                Err(e) => return fail(QfStatus::InvalidUtf8, e),
            }
        };
        let reports = identities::verify_filtered(filter);
        let failed = reports.iter().filter(|r| !r.passed).count() as u64;
        let max_deviation = reports
            .iter()
            .map(|r| r.max_deviation)
            .fold(0.0f64, f64::max);
        *out = QfVerifySummary {
            total: reports.len() as u64,
            failed,
            max_deviation,
        };
        QfStatus::Ok
    })
}

/// Exact X-detection block map; `consumed` is the state spent on the
/// parity check.
///
/// # Safety
/// All pointers must be valid for reads (`out` for writes).
#[no_mangle]
pub unsafe extern "C" fn qf_xdetect(
    input: *const QfErrorDistribution,
    consumed: *const QfErrorDistribution,
    out: *mut QfBlockResult,
) -> QfStatus {
    guarded(|| {
        if input.is_null() || consumed.is_null() || out.is_null() {
            return fail(QfStatus::NullPointer, "null argument");
        }
        let d1 = match dist_in(&*input) {
            Ok(d) => d,
            Err(status) => return status,
        };
        let d2 = match dist_in(&*consumed) {
            Ok(d) => d,
            Err(status) => return status,
        };
        *out = block_out(&xdetect_map(&d1, &d2));
        QfStatus::Ok
    })
}

/// Exact Z-detection block map over `inputs[0..7]`: the surviving
/// state followed by the six consumed ones.
///
/// # Safety
/// `inputs` must point to seven readable distributions; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qf_zdetect(
    inputs: *const QfErrorDistribution,
    out: *mut QfBlockResult,
) -> QfStatus {
    guarded(|| {
        if inputs.is_null() || out.is_null() {
            return fail(QfStatus::NullPointer, "null argument");
        }
        let raw = std::slice::from_raw_parts(inputs, 7);
        let mut dists = [ErrorDistribution::ideal(); 7];
        for (slot, d) in raw.iter().enumerate() {
            dists[slot] = match dist_in(d) {
                Ok(d) => d,
                Err(status) => return status,
            };
        }
        *out = block_out(&zdetect_map(&dists));
        QfStatus::Ok
    })
}

/// Greedy nesting under the twirled preparation noise model with rate
/// `p`, stopping once the total error drops below `stop_eps`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qf_greedy_nesting(
    p: f64,
    max_rounds: u64,
    stop_eps: f64,
    out: *mut QfNestingSummary,
) -> QfStatus {
    guarded(|| {
        if out.is_null() {
            return fail(QfStatus::NullPointer, "null argument");
        }
        let model = match NoiseModel::new(p) {
            Ok(m) => m,
            Err(e) => return fail(QfStatus::InvalidArgument, e),
        };
        let schedule = greedy_nesting(&model, max_rounds as usize, stop_eps);
        *out = QfNestingSummary {
            rounds: schedule.rounds.len() as u64,
            converged: schedule.converged,
            diverged: schedule.diverged,
            raw_per_output: schedule.raw_per_output,
            final_distribution: dist_out(&schedule.final_distribution),
        };
        QfStatus::Ok
    })
}

/// Bisects for the largest noise rate whose greedy nesting converges;
/// requires convergence at `lo` and divergence at `hi`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qf_threshold_scan(
    lo: f64,
    hi: f64,
    tol: f64,
    out: *mut f64,
) -> QfStatus {
    guarded(|| {
        if out.is_null() {
            return fail(QfStatus::NullPointer, "null argument");
        }
        match threshold_scan(lo, hi, tol) {
            Ok(t) => {
                *out = t;
                QfStatus::Ok
            }
            Err(e) => fail(QfStatus::InvalidArgument, e),
        }
    })
}

/// Asymptotic consumption figures: the per-quadratic-suppression ratio
/// 2 * 7^(log_3 2) and the unamortized X-plus-Z round cost.
///
/// # Safety
/// Both pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qf_cost_ratio(
    quadratic_amortized: *mut f64,
    raw_pair_composite: *mut f64,
) -> QfStatus {
    guarded(|| {
        if quadratic_amortized.is_null() || raw_pair_composite.is_null() {
            return fail(QfStatus::NullPointer, "null argument");
        }
        *quadratic_amortized = quadratic_amortized_ratio();
        *raw_pair_composite = f64::from(BlockKind::XBlock.arity() * BlockKind::ZBlock.arity());
        QfStatus::Ok
    })
}
