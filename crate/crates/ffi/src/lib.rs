//! C ABI over the gravecho simulator.
//!
//! Every fallible call returns a [`GeStatus`]; the message for the last
//! failure on the calling thread is available from [`ge_last_error_message`].
//! Scenarios and results are opaque handles released with their `_free`
//! functions. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gravecho::config::{Physics, ResolvedRun, RunConfig};
use gravecho::detuning::{critical_speed, detuning};
use gravecho::runner::{execute, Outcome};
use gravecho::scenarios::Registry;
use gravecho::solver::BoundaryRecord;
use gravecho::units::{redshift_gradient, ConventionTag, NumericsConvention, PhysicalConstants};
use gravecho::Error;

/// Status codes; 1-4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeStatus {
    Ok = 0,
    Io = 1,
    Config = 2,
    Numerical = 3,
    NoEcho = 4,
    NullArgument = 5,
    BufferTooSmall = 6,
    OutOfRange = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeConvention {
    PaperNumbers = 0,
    Ln2Literal = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GeEchoMetrics {
    pub m: u32,
    pub a: f64,
    pub b: f64,
    pub tau: f64,
    pub efficiency: f64,
    pub fidelity: f64,
}

/// A resolved scenario with its physics settings.
pub struct GeScenario {
    run: ResolvedRun,
}

/// The outcome of [`ge_run`].
pub struct GeResult {
    outcome: Outcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> GeStatus {
    match e.exit_code() {
        1 => GeStatus::Io,
        2 => GeStatus::Config,
        3 => GeStatus::Numerical,
        _ => GeStatus::NoEcho,
    }
}

fn fail(e: Error) -> GeStatus {
    let status = status_of(&e);
    set_error(e.to_string());
    status
}

fn guard(f: impl FnOnce() -> GeStatus) -> GeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            GeStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, GeStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(GeStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        GeStatus::Config
    })
}

macro_rules! non_null {
    ($p:expr, $what:expr) => {
        if $p.is_null() {
            set_error(concat!($what, " is null"));
            return GeStatus::NullArgument;
        }
    };
}

/// Message for the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ge_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ge_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn store_scenario(run: Result<ResolvedRun, Error>, out: *mut *mut GeScenario) -> GeStatus {
    match run {
        Ok(run) => {
            unsafe { *out = Box::into_raw(Box::new(GeScenario { run })) };
            GeStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Build a scenario from a built-in preset name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_scenario_from_preset(
    name: *const c_char,
    out: *mut *mut GeScenario,
) -> GeStatus {
    guard(|| {
        non_null!(out, "out");
        let name = match read_str(name, "name") {
            Ok(n) => n,
            Err(s) => return s,
        };
        store_scenario(
            RunConfig::for_scenario(name).resolve(&Registry::builtin()),
            out,
        )
    })
}

/// Build a scenario from TOML run-config text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_scenario_from_config(
    toml: *const c_char,
    out: *mut *mut GeScenario,
) -> GeStatus {
    guard(|| {
        non_null!(out, "out");
        let text = match read_str(toml, "toml") {
            Ok(t) => t,
            Err(s) => return s,
        };
        store_scenario(
            RunConfig::from_toml_str(text).and_then(|c| c.resolve(&Registry::builtin())),
            out,
        )
    })
}

/// Switch the linewidth convention of a scenario.
///
/// # Safety
/// `scenario` must come from a `ge_scenario_from_*` call and not be freed.
#[no_mangle]
pub unsafe extern "C" fn ge_scenario_set_convention(
    scenario: *mut GeScenario,
    convention: GeConvention,
) -> GeStatus {
    guard(|| {
        non_null!(scenario, "scenario");
        let tag = match convention {
            GeConvention::PaperNumbers => ConventionTag::PaperNumbers,
            GeConvention::Ln2Literal => ConventionTag::Ln2Literal,
        };
        (&mut *scenario).run.physics.convention = NumericsConvention::new(tag);
        GeStatus::Ok
    })
}

/// Number of targets in the scenario (0 for null).
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ge_scenario_target_count(scenario: *const GeScenario) -> usize {
    scenario
        .as_ref()
        .map_or(0, |s| s.run.scenario.targets.len())
}

/// # Safety
/// `scenario` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ge_scenario_free(scenario: *mut GeScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Simulate and analyse a scenario. Missing echoes do not fail the run; see
/// [`ge_result_metrics_status`].
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_run(scenario: *const GeScenario, out: *mut *mut GeResult) -> GeStatus {
    guard(|| {
        non_null!(scenario, "scenario");
        non_null!(out, "out");
        let s = &(&*scenario).run;
        match execute(&s.scenario, &s.physics) {
            Ok(outcome) => {
                *out = Box::into_raw(Box::new(GeResult { outcome }));
                GeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `result` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ge_result_free(result: *mut GeResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Samples per boundary record (0 for null).
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ge_result_len(result: *const GeResult) -> usize {
    result.as_ref().map_or(0, |r| r.outcome.run.input().len())
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ge_result_target_count(result: *const GeResult) -> usize {
    result.as_ref().map_or(0, |r| r.outcome.run.outputs.len())
}

unsafe fn copy_record(
    r: &BoundaryRecord,
    t: *mut f64,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> GeStatus {
    non_null!(re, "re");
    non_null!(im, "im");
    if len < r.len() {
        set_error(format!(
            "buffer holds {len} samples, record has {}",
            r.len()
        ));
        return GeStatus::BufferTooSmall;
    }
    for (i, (time, w)) in r.times.iter().zip(&r.omega).enumerate() {
        if !t.is_null() {
            *t.add(i) = *time;
        }
        *re.add(i) = w.re;
        *im.add(i) = w.im;
    }
    GeStatus::Ok
}

/// Copy the drive Ω(t) entering the first target. `times` may be null.
///
/// # Safety
/// Non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ge_result_copy_input(
    result: *const GeResult,
    times: *mut f64,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> GeStatus {
    guard(|| {
        non_null!(result, "result");
        copy_record((&*result).outcome.run.input(), times, re, im, len)
    })
}

/// Copy the field leaving target `target` (1-based). `times` may be null.
///
/// # Safety
/// Non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ge_result_copy_output(
    result: *const GeResult,
    target: usize,
    times: *mut f64,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> GeStatus {
    guard(|| {
        non_null!(result, "result");
        let outputs = &(&*result).outcome.run.outputs;
        if target == 0 || target > outputs.len() {
            set_error(format!("target {target} outside 1..={}", outputs.len()));
            return GeStatus::OutOfRange;
        }
        copy_record(&outputs[target - 1], times, re, im, len)
    })
}

/// Why no metrics exist: `GE_STATUS_OK` when they do or were not requested.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ge_result_metrics_status(result: *const GeResult) -> GeStatus {
    guard(|| {
        non_null!(result, "result");
        match &(&*result).outcome.metrics_error {
            Some(e) => {
                set_error(e.to_string());
                status_of(e)
            }
            None => GeStatus::Ok,
        }
    })
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ge_result_metrics_count(result: *const GeResult) -> usize {
    result.as_ref().map_or(0, |r| r.outcome.metrics.len())
}

/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_result_metric(
    result: *const GeResult,
    index: usize,
    out: *mut GeEchoMetrics,
) -> GeStatus {
    guard(|| {
        non_null!(result, "result");
        non_null!(out, "out");
        match (&*result).outcome.metrics.get(index) {
            Some(m) => {
                *out = GeEchoMetrics {
                    m: m.m as u32,
                    a: m.a,
                    b: m.b,
                    tau: m.tau,
                    efficiency: m.efficiency,
                    fidelity: m.fidelity,
                };
                GeStatus::Ok
            }
            None => {
                set_error(format!(
                    "metric {index} of {}",
                    (&*result).outcome.metrics.len()
                ));
                GeStatus::OutOfRange
            }
        }
    })
}

/// Spectrum points (0 when no spectrum was computed).
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ge_result_spectrum_len(result: *const GeResult) -> usize {
    result
        .as_ref()
        .and_then(|r| r.outcome.spectrum.as_ref())
        .map_or(0, |s| s.omega.len())
}

/// Copy S(ω) with ω in units of Γ0.
///
/// # Safety
/// Both buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ge_result_copy_spectrum(
    result: *const GeResult,
    omega_gamma0: *mut f64,
    s: *mut f64,
    len: usize,
) -> GeStatus {
    guard(|| {
        non_null!(result, "result");
        non_null!(omega_gamma0, "omega_gamma0");
        non_null!(s, "s");
        let Some(spec) = (&*result).outcome.spectrum.as_ref() else {
            set_error("no spectrum in this result");
            return GeStatus::OutOfRange;
        };
        if len < spec.omega.len() {
            set_error(format!(
                "buffer holds {len} points, spectrum has {}",
                spec.omega.len()
            ));
            return GeStatus::BufferTooSmall;
        }
        for (i, (w, v)) in spec.omega_in_gamma0().zip(&spec.s_values).enumerate() {
            *omega_gamma0.add(i) = w;
            *s.add(i) = *v;
        }
        GeStatus::Ok
    })
}

/// Redshift gradient K (rad s^-1 m^-1) for the default constants.
#[no_mangle]
pub extern "C" fn ge_redshift_gradient() -> f64 {
    redshift_gradient(&PhysicalConstants::default())
}

/// Δ(z, x, θ) in rad/s for the default constants.
#[no_mangle]
pub extern "C" fn ge_detuning(z: f64, x: f64, theta: f64) -> f64 {
    detuning(z, x, theta, ge_redshift_gradient())
}

/// Detuning in units of Γ0 under a convention.
#[no_mangle]
pub extern "C" fn ge_detuning_gamma0(z: f64, x: f64, theta: f64, convention: GeConvention) -> f64 {
    let tag = match convention {
        GeConvention::PaperNumbers => ConventionTag::PaperNumbers,
        GeConvention::Ln2Literal => ConventionTag::Ln2Literal,
    };
    let physics = Physics {
        constants: PhysicalConstants::default(),
        convention: NumericsConvention::new(tag),
    };
    physics.convention.in_gamma0(ge_detuning(z, x, theta))
}

/// Speed (m/s) at which the transverse Doppler shift cancels the detuning at `z`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_critical_speed(z: f64, out: *mut f64) -> GeStatus {
    guard(|| {
        non_null!(out, "out");
        match critical_speed(z, &PhysicalConstants::default()) {
            Ok(v) => {
                *out = v;
                GeStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
