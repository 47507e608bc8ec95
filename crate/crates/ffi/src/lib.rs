//! C ABI for the certificate toolkit: opaque handles, integer status codes,
//! and a thread-local last-error message.
//!
//! Ownership rules: every `*_new`/`*_parse`/out-parameter object must be
//! released with its matching `*_free`; strings returned by the library must
//! be released with `kcbc_string_free`. Handles are not thread-safe; confine
//! each handle to one thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kcbc::plant::{self, trajectory_from_csv, trajectory_to_csv, TrajectoryData};
use kcbc::report::{certificate_report_json, parse_certificate_report, verification_report_json};
use kcbc::scenario::ScenarioConfig;
use kcbc::synth::{self, Controller, SynthStatus, SynthesisReport};
use kcbc::{datarep, verify};

/// Status codes returned by every fallible function. Aligned with the CLI
/// exit codes where the cases overlap.
pub const KCBC_OK: c_int = 0;
pub const KCBC_ERR_CONFIG: c_int = 1;
pub const KCBC_ERR_EXCITATION: c_int = 2;
pub const KCBC_ERR_NOT_FOUND_AT_K: c_int = 3;
pub const KCBC_ERR_CANCELLATION: c_int = 4;
pub const KCBC_ERR_VERIFY_FAILED: c_int = 5;
pub const KCBC_ERR_NULL_ARGUMENT: c_int = 6;
pub const KCBC_ERR_INVALID_UTF8: c_int = 7;
pub const KCBC_ERR_PANIC: c_int = 8;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// The message describing the most recent error on this thread. The pointer
/// is valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kcbc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Opaque scenario configuration.
pub struct KcbcScenario(ScenarioConfig);
/// Opaque input-state trajectory.
pub struct KcbcTrajectory(TrajectoryData);
/// Opaque synthesis result (certificate, controller, diagnostics).
pub struct KcbcReport(SynthesisReport);

fn guard(f: impl FnOnce() -> c_int) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_last_error("internal panic");
            KCBC_ERR_PANIC
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, c_int> {
    if ptr.is_null() {
        set_last_error("null string argument");
        return Err(KCBC_ERR_NULL_ARGUMENT);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error("string argument is not valid UTF-8");
        KCBC_ERR_INVALID_UTF8
    })
}

fn string_out(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .unwrap_or_default()
        .into_raw()
}

/// Release a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn kcbc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// scenario

/// Parse a scenario configuration from JSON text.
#[no_mangle]
pub unsafe extern "C" fn kcbc_scenario_parse(
    json: *const c_char,
    out: *mut *mut KcbcScenario,
) -> c_int {
    guard(|| {
        if out.is_null() {
            set_last_error("null output argument");
            return KCBC_ERR_NULL_ARGUMENT;
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(code) => return code,
        };
        match ScenarioConfig::from_json(text) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(KcbcScenario(cfg)));
                KCBC_OK
            }
            Err(e) => {
                set_last_error(&e.to_string());
                KCBC_ERR_CONFIG
            }
        }
    })
}

/// Serialize a scenario back to JSON (release with `kcbc_string_free`).
#[no_mangle]
pub unsafe extern "C" fn kcbc_scenario_to_json(s: *const KcbcScenario) -> *mut c_char {
    if s.is_null() {
        return ptr::null_mut();
    }
    string_out((*s).0.to_json())
}

#[no_mangle]
pub unsafe extern "C" fn kcbc_scenario_free(s: *mut KcbcScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// trajectory

/// Run the scenario's excitation experiment and collect a trajectory.
#[no_mangle]
pub unsafe extern "C" fn kcbc_collect(
    s: *const KcbcScenario,
    seed: u64,
    out: *mut *mut KcbcTrajectory,
) -> c_int {
    guard(|| {
        if s.is_null() || out.is_null() {
            set_last_error("null argument");
            return KCBC_ERR_NULL_ARGUMENT;
        }
        let cfg = &(*s).0;
        let built = cfg.build_plant().and_then(|pl| {
            let dict = cfg.build_dictionary()?;
            let exc = cfg.excitation(&pl, seed);
            Ok((pl, dict, exc))
        });
        let (pl, dict, exc) = match built {
            Ok(v) => v,
            Err(e) => {
                set_last_error(&e.to_string());
                return KCBC_ERR_CONFIG;
            }
        };
        match plant::collect_excited(&pl, &cfg.x_start, &exc, cfg.horizon, &dict, 5) {
            Ok((data, _)) => {
                *out = Box::into_raw(Box::new(KcbcTrajectory(data)));
                KCBC_OK
            }
            Err(e) => {
                set_last_error(&e.to_string());
                KCBC_ERR_EXCITATION
            }
        }
    })
}

/// Parse a trajectory from the CSV interchange format.
#[no_mangle]
pub unsafe extern "C" fn kcbc_trajectory_parse_csv(
    csv: *const c_char,
    out: *mut *mut KcbcTrajectory,
) -> c_int {
    guard(|| {
        if out.is_null() {
            set_last_error("null output argument");
            return KCBC_ERR_NULL_ARGUMENT;
        }
        let text = match read_str(csv) {
            Ok(t) => t,
            Err(code) => return code,
        };
        match trajectory_from_csv(text) {
            Ok(data) => {
                *out = Box::into_raw(Box::new(KcbcTrajectory(data)));
                KCBC_OK
            }
            Err(e) => {
                set_last_error(&e.to_string());
                KCBC_ERR_CONFIG
            }
        }
    })
}

/// Serialize a trajectory to CSV (release with `kcbc_string_free`).
#[no_mangle]
pub unsafe extern "C" fn kcbc_trajectory_to_csv(t: *const KcbcTrajectory) -> *mut c_char {
    if t.is_null() {
        return ptr::null_mut();
    }
    string_out(trajectory_to_csv(&(*t).0))
}

#[no_mangle]
pub unsafe extern "C" fn kcbc_trajectory_free(t: *mut KcbcTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

// ---------------------------------------------------------------------------
// synthesis

/// Synthesize a certificate and controller. `k` overrides the scenario's
/// induction depth when nonzero. On `KCBC_OK` and `KCBC_ERR_NOT_FOUND_AT_K`
/// a report handle is stored in `out` (the latter carries diagnostics only).
#[no_mangle]
pub unsafe extern "C" fn kcbc_synthesize(
    s: *const KcbcScenario,
    t: *const KcbcTrajectory,
    k: usize,
    out: *mut *mut KcbcReport,
) -> c_int {
    guard(|| {
        if s.is_null() || t.is_null() || out.is_null() {
            set_last_error("null argument");
            return KCBC_ERR_NULL_ARGUMENT;
        }
        let cfg = &(*s).0;
        let data = &(*t).0;
        let prob = match cfg.build_problem(if k == 0 { None } else { Some(k) }) {
            Ok(p) => p,
            Err(e) => {
                set_last_error(&e.to_string());
                return KCBC_ERR_CONFIG;
            }
        };
        let nonlinear = prob.dictionary.total_terms() > prob.n;
        let result = if nonlinear {
            synth::synthesize_nonlinear(data, &prob)
        } else {
            synth::synthesize_linear(data, &prob)
        };
        match result {
            Ok(rep) => {
                let code = match rep.status {
                    SynthStatus::Certified => KCBC_OK,
                    SynthStatus::NotFoundAtK => KCBC_ERR_NOT_FOUND_AT_K,
                    SynthStatus::DataError => {
                        let msg = rep.diagnostics.messages.join("; ");
                        set_last_error(&msg);
                        return if msg.contains("cancellation") {
                            KCBC_ERR_CANCELLATION
                        } else {
                            KCBC_ERR_EXCITATION
                        };
                    }
                };
                if code != KCBC_OK {
                    set_last_error(&rep.diagnostics.messages.join("; "));
                }
                *out = Box::into_raw(Box::new(KcbcReport(rep)));
                code
            }
            Err(e) => {
                set_last_error(&e.to_string());
                KCBC_ERR_CONFIG
            }
        }
    })
}

/// Serialize a synthesis report to its JSON interchange format (release
/// with `kcbc_string_free`).
#[no_mangle]
pub unsafe extern "C" fn kcbc_report_to_json(r: *const KcbcReport) -> *mut c_char {
    if r.is_null() {
        return ptr::null_mut();
    }
    string_out(certificate_report_json(&(*r).0))
}

#[no_mangle]
pub unsafe extern "C" fn kcbc_report_free(r: *mut KcbcReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

// ---------------------------------------------------------------------------
// verification

/// Independently verify a serialized certificate report against a scenario
/// and the trajectory it was synthesized from. Returns `KCBC_OK` on PASS,
/// `KCBC_ERR_VERIFY_FAILED` on FAIL; when `out_json` is non-null it receives
/// the verification report JSON in both cases.
#[no_mangle]
pub unsafe extern "C" fn kcbc_verify(
    s: *const KcbcScenario,
    report_json: *const c_char,
    t: *const KcbcTrajectory,
    runs: usize,
    horizon: usize,
    seed: u64,
    out_json: *mut *mut c_char,
) -> c_int {
    guard(|| {
        if s.is_null() || t.is_null() {
            set_last_error("null argument");
            return KCBC_ERR_NULL_ARGUMENT;
        }
        let text = match read_str(report_json) {
            Ok(v) => v,
            Err(code) => return code,
        };
        let cfg = &(*s).0;
        let data = &(*t).0;

        let parsed = match parse_certificate_report(text) {
            Ok(p) => p,
            Err(e) => {
                set_last_error(&e.to_string());
                return KCBC_ERR_CONFIG;
            }
        };
        let (cert, k_gain) = match (parsed.certificate, parsed.k_gain) {
            (Some(c), Some(k)) => (c, k),
            _ => {
                set_last_error("report carries no certificate/controller");
                return KCBC_ERR_CONFIG;
            }
        };
        let prob = match cfg.build_problem(Some(cert.k)) {
            Ok(p) => p,
            Err(e) => {
                set_last_error(&e.to_string());
                return KCBC_ERR_CONFIG;
            }
        };
        let lifted = match plant::lift(data, &prob.dictionary) {
            Ok(l) => l,
            Err(e) => {
                set_last_error(&e.to_string());
                return KCBC_ERR_CONFIG;
            }
        };
        let rep = match datarep::rep_from_gain(data, &lifted.m0, &k_gain) {
            Ok(r) => r,
            Err(e @ datarep::DataRepError::RankDeficient { .. }) => {
                set_last_error(&e.to_string());
                return KCBC_ERR_EXCITATION;
            }
            Err(e) => {
                set_last_error(&e.to_string());
                return KCBC_ERR_CONFIG;
            }
        };
        let ctrl = Controller {
            k_gain,
            dictionary: prob.dictionary.clone(),
        };
        let pl = cfg.build_plant().ok();
        let vrep = verify::verify_certificate(
            &cert,
            &ctrl,
            &rep,
            &prob,
            pl.as_ref(),
            runs,
            horizon,
            seed,
            verify::DEFAULT_SAMPLES,
        );
        if !out_json.is_null() {
            *out_json = string_out(verification_report_json(&vrep));
        }
        if vrep.pass {
            KCBC_OK
        } else {
            let (name, worst) = vrep.condition_checks.worst();
            set_last_error(&format!("verification failed: {name} violation {worst:.3e}"));
            KCBC_ERR_VERIFY_FAILED
        }
    })
}
