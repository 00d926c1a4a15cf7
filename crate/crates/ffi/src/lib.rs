//! C ABI over the `epimacro` simulator.
//!
//! Every function returns an [`EpmStatus`]; results come back through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`epm_last_error`]. Handles are opaque and must be released with their
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use chrono::{Datelike, NaiveDate};
use epimacro::io::write_trajectory;
use epimacro::scenario::{
    summarize, PolicySchedule, RunSettings, TrajectoryRow, NO_INTERVENTION, NO_PANDEMIC,
};
use epimacro::{run_scenario, ModelParams, Scenario, Trajectory};

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Simulation = 5,
    NotFound = 6,
    BufferTooSmall = 7,
    Panic = 99,
}

/// Parameter set handle.
pub struct EpmParams {
    inner: ModelParams,
}

/// Simulated trajectory handle.
pub struct EpmTrajectory {
    inner: Trajectory,
}

/// Headline numbers of a run compared against a reference run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpmSummary {
    pub peak_active_infections: c_double,
    /// Days after the first row.
    pub peak_day: i64,
    pub total_deaths: c_double,
    pub max_output_drop_pct: c_double,
    pub max_output_drop_day: i64,
    pub welfare: c_double,
    pub max_euler_residual: c_double,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(EpmStatus, String);

impl Failure {
    fn new(status: EpmStatus, msg: impl Into<String>) -> Self {
        Self(status, msg.into())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EpmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EpmStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            EpmStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(EpmStatus::NullPointer, format!("{what} is null")))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(
            EpmStatus::NullPointer,
            format!("{what} is null"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(EpmStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn store<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(
            EpmStatus::NullPointer,
            "output pointer is null",
        ));
    }
    out.write(value);
    Ok(())
}

fn simulation_error(e: impl std::fmt::Display) -> Failure {
    Failure::new(EpmStatus::Simulation, e.to_string())
}

fn run(scenario: &Scenario, params: &ModelParams) -> Result<*mut EpmTrajectory, Failure> {
    let inner =
        run_scenario(scenario, params, &RunSettings::default()).map_err(simulation_error)?;
    Ok(Box::into_raw(Box::new(EpmTrajectory { inner })))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn epm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn epm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn epm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default calibrated parameter set.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn epm_params_default(out: *mut *mut EpmParams) -> EpmStatus {
    guard(|| {
        let p = Box::new(EpmParams {
            inner: ModelParams::default(),
        });
        store(out, Box::into_raw(p))
    })
}

/// Parses a parameter set from JSON text with every field present.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn epm_params_from_json(
    json: *const c_char,
    out: *mut *mut EpmParams,
) -> EpmStatus {
    guard(|| {
        let s = text(json, "json")?;
        let inner: ModelParams =
            serde_json::from_str(s).map_err(|e| Failure::new(EpmStatus::Parse, e.to_string()))?;
        inner
            .validate()
            .map_err(|e| Failure::new(EpmStatus::InvalidArgument, e.to_string()))?;
        store(out, Box::into_raw(Box::new(EpmParams { inner })))
    })
}

/// Serialises a parameter set; free the result with [`epm_string_free`].
///
/// # Safety
/// `params` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn epm_params_to_json(
    params: *const EpmParams,
    out: *mut *mut c_char,
) -> EpmStatus {
    guard(|| {
        let p = borrow(params, "params")?;
        let s = serde_json::to_string_pretty(&p.inner).map_err(simulation_error)?;
        store(out, CString::new(s).expect("json has no nul").into_raw())
    })
}

fn field_map(p: &ModelParams) -> serde_json::Map<String, serde_json::Value> {
    match serde_json::to_value(p).expect("params serialise") {
        serde_json::Value::Object(m) => m,
        _ => unreachable!("params serialise to an object"),
    }
}

/// Reads one field by name, e.g. `"b0"` or `"g_daily"`.
///
/// # Safety
/// `params` must be a live handle, `name` nul-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn epm_params_get(
    params: *const EpmParams,
    name: *const c_char,
    out: *mut c_double,
) -> EpmStatus {
    guard(|| {
        let p = borrow(params, "params")?;
        let name = text(name, "name")?;
        let v = field_map(&p.inner)
            .get(name)
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| Failure::new(EpmStatus::NotFound, format!("no parameter `{name}`")))?;
        store(out, v)
    })
}

/// Sets one field by name. The handle is left unchanged if the new set
/// would be invalid.
///
/// # Safety
/// `params` must be a live handle and `name` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn epm_params_set(
    params: *mut EpmParams,
    name: *const c_char,
    value: c_double,
) -> EpmStatus {
    guard(|| {
        let p = params
            .as_mut()
            .ok_or_else(|| Failure::new(EpmStatus::NullPointer, "params is null"))?;
        let name = text(name, "name")?;
        let mut map = field_map(&p.inner);
        let slot = map
            .get_mut(name)
            .ok_or_else(|| Failure::new(EpmStatus::NotFound, format!("no parameter `{name}`")))?;
        *slot = serde_json::Number::from_f64(value)
            .map(serde_json::Value::Number)
            .ok_or_else(|| {
                Failure::new(
                    EpmStatus::InvalidArgument,
                    format!("`{name}` must be finite"),
                )
            })?;
        let next: ModelParams = serde_json::from_value(serde_json::Value::Object(map))
            .map_err(|e| Failure::new(EpmStatus::InvalidArgument, e.to_string()))?;
        next.validate()
            .map_err(|e| Failure::new(EpmStatus::InvalidArgument, e.to_string()))?;
        p.inner = next;
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a live handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn epm_params_free(params: *mut EpmParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Runs a named preset: `"no-pandemic"` or `"no-intervention"`.
///
/// # Safety
/// `params` must be a live handle, `name` nul-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn epm_run_preset(
    params: *const EpmParams,
    name: *const c_char,
    out: *mut *mut EpmTrajectory,
) -> EpmStatus {
    guard(|| {
        let p = borrow(params, "params")?;
        let name = text(name, "name")?;
        let scenario = Scenario::preset(name).ok_or_else(|| {
            Failure::new(
                EpmStatus::NotFound,
                format!("unknown scenario `{name}` (known: {NO_PANDEMIC}, {NO_INTERVENTION})"),
            )
        })?;
        store(out, run(&scenario, &p.inner)?)
    })
}

/// Runs the no-intervention outbreak with a production cut of `intensity`
/// (a fraction in [0, 1)) for `weeks` weeks from `start` (`YYYY-MM-DD`).
///
/// # Safety
/// `params` must be a live handle, `start` nul-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn epm_run_policy(
    params: *const EpmParams,
    start: *const c_char,
    intensity: c_double,
    weeks: u32,
    out: *mut *mut EpmTrajectory,
) -> EpmStatus {
    guard(|| {
        let p = borrow(params, "params")?;
        let start = text(start, "start")?;
        let date = NaiveDate::parse_from_str(start, "%Y-%m-%d")
            .map_err(|_| Failure::new(EpmStatus::Parse, format!("`{start}` is not an ISO date")))?;
        let base = Scenario::no_intervention();
        let schedule = PolicySchedule::weeks(date, intensity, weeks);
        let scenario = base.with_policy(format!("policy-{start}-{intensity}-{weeks}w"), schedule);
        scenario
            .validate()
            .map_err(|e| Failure::new(EpmStatus::InvalidArgument, e.to_string()))?;
        store(out, run(&scenario, &p.inner)?)
    })
}

/// Runs a scenario given as JSON.
///
/// # Safety
/// `params` must be a live handle, `json` nul-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn epm_run_scenario_json(
    params: *const EpmParams,
    json: *const c_char,
    out: *mut *mut EpmTrajectory,
) -> EpmStatus {
    guard(|| {
        let p = borrow(params, "params")?;
        let s = text(json, "json")?;
        let scenario: Scenario =
            serde_json::from_str(s).map_err(|e| Failure::new(EpmStatus::Parse, e.to_string()))?;
        scenario
            .validate()
            .map_err(|e| Failure::new(EpmStatus::InvalidArgument, e.to_string()))?;
        store(out, run(&scenario, &p.inner)?)
    })
}

/// Number of daily rows.
///
/// # Safety
/// `trajectory` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn epm_trajectory_len(
    trajectory: *const EpmTrajectory,
    out: *mut usize,
) -> EpmStatus {
    guard(|| store(out, borrow(trajectory, "trajectory")?.inner.rows.len()))
}

/// Calendar date of the first row.
///
/// # Safety
/// `trajectory` must be a live handle and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn epm_trajectory_start(
    trajectory: *const EpmTrajectory,
    year: *mut i32,
    month: *mut u32,
    day: *mut u32,
) -> EpmStatus {
    guard(|| {
        let t = borrow(trajectory, "trajectory")?;
        let d = t
            .inner
            .start()
            .ok_or_else(|| Failure::new(EpmStatus::InvalidArgument, "trajectory is empty"))?;
        store(year, d.year())?;
        store(month, d.month())?;
        store(day, d.day())
    })
}

/// Copies one column (`N S I R D A K Y C H p`) into `buf`, which must hold
/// at least `len` values where `len` is the row count.
///
/// # Safety
/// `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn epm_trajectory_column(
    trajectory: *const EpmTrajectory,
    name: *const c_char,
    buf: *mut c_double,
    len: usize,
) -> EpmStatus {
    guard(|| {
        let t = borrow(trajectory, "trajectory")?;
        let name = text(name, "column")?;
        let values = t.inner.column(name).ok_or_else(|| {
            Failure::new(
                EpmStatus::NotFound,
                format!(
                    "unknown column `{name}` (valid: {})",
                    TrajectoryRow::COLUMNS[1..].join(", ")
                ),
            )
        })?;
        if buf.is_null() {
            return Err(Failure::new(EpmStatus::NullPointer, "buf is null"));
        }
        if len < values.len() {
            return Err(Failure::new(
                EpmStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// Writes the trajectory as CSV.
///
/// # Safety
/// `trajectory` must be a live handle and `path` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn epm_trajectory_write_csv(
    trajectory: *const EpmTrajectory,
    path: *const c_char,
) -> EpmStatus {
    guard(|| {
        let t = borrow(trajectory, "trajectory")?;
        let path = text(path, "path")?;
        write_trajectory(&t.inner, Path::new(path))
            .map_err(|e| Failure::new(EpmStatus::Io, e.to_string()))
    })
}

/// Summary of `trajectory` measured against `reference`, usually the
/// no-pandemic run.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn epm_trajectory_summary(
    trajectory: *const EpmTrajectory,
    reference: *const EpmTrajectory,
    out: *mut EpmSummary,
) -> EpmStatus {
    guard(|| {
        let t = &borrow(trajectory, "trajectory")?.inner;
        let r = &borrow(reference, "reference")?.inner;
        let m = summarize(t, r, &[])
            .map_err(|e| Failure::new(EpmStatus::InvalidArgument, e.to_string()))?;
        let start = t.start().expect("summarize rejects empty runs");
        store(
            out,
            EpmSummary {
                peak_active_infections: m.peak_active_infections,
                peak_day: (m.peak_date - start).num_days(),
                total_deaths: m.total_deaths,
                max_output_drop_pct: m.max_output_drop_pct,
                max_output_drop_day: (m.max_output_drop_date - start).num_days(),
                welfare: m.welfare,
                max_euler_residual: m.max_euler_residual,
            },
        )
    })
}

/// # Safety
/// `trajectory` must be null or a live handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn epm_trajectory_free(trajectory: *mut EpmTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}
