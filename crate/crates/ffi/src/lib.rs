//! C ABI for the trustrail guardrail engine.
//!
//! The surface is a small set of functions over an opaque
//! [`TrustrailEngine`] handle: evaluate a message, register attestations,
//! re-validate, and read a trust report. Structured results cross the
//! boundary as JSON strings allocated by this library; free them with
//! [`trustrail_string_free`]. Every call returns a [`TrustrailStatus`];
//! on failure, [`trustrail_last_error`] yields a human-readable message
//! for the current thread.
//!
//! The generated header lives at `include/trustrail.h`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::ffi::{CStr, CString};
use std::sync::Mutex;

use libc::c_char;

use trustrail::attestation::{AttestationRegistry, RevalidationState, TtpAttestation};
use trustrail::config::Config;
use trustrail::guardrail::{GuardrailEngine, GuardrailError, TrustState, UserContext};

/// Result codes of every FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrustrailStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An input string was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Configuration could not be loaded or validated.
    Config = 3,
    /// A JSON payload could not be parsed or serialized.
    Json = 4,
    /// The user's session is locked or terminated.
    SessionClosed = 5,
    /// Input failed validation (empty message, bad attestation, ...).
    Validation = 6,
    /// The requested entity does not exist.
    NotFound = 7,
    Internal = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() =
            Some(CString::new(message).unwrap_or_else(|_| CString::new("invalid error").unwrap()));
    });
}

struct UserEntry {
    trust: TrustState,
    reval: RevalidationState,
}

/// Opaque engine handle: the decision engine, an attestation registry,
/// and in-memory per-user trust state. Eventing and persistence stay on
/// the Rust side of the fence (use the gateway binary for that); this
/// handle serves embedders that want decisions only.
pub struct TrustrailEngine {
    engine: GuardrailEngine,
    registry: AttestationRegistry,
    users: Mutex<HashMap<String, UserEntry>>,
}

impl TrustrailEngine {
    fn from_config(config: Config) -> Result<Self, GuardrailError> {
        Ok(Self {
            engine: GuardrailEngine::from_config(&config)?,
            registry: AttestationRegistry::new(),
            users: Mutex::new(HashMap::new()),
        })
    }
}

/// # Safety
/// `ptr` must be non-null and point to a valid NUL-terminated string.
unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, TrustrailStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(TrustrailStatus::NullArgument);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        TrustrailStatus::InvalidUtf8
    })
}

fn write_string(out: *mut *mut c_char, value: String) -> TrustrailStatus {
    if out.is_null() {
        set_error("null output pointer");
        return TrustrailStatus::NullArgument;
    }
    match CString::new(value) {
        Ok(cstring) => {
            unsafe { *out = cstring.into_raw() };
            TrustrailStatus::Ok
        }
        Err(_) => {
            set_error("result contained an interior NUL byte");
            TrustrailStatus::Internal
        }
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn trustrail_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Last error message for the current thread, or null when no error has
/// occurred. Free with [`trustrail_string_free`].
#[no_mangle]
pub extern "C" fn trustrail_last_error() -> *mut c_char {
    LAST_ERROR
        .with(|slot| slot.borrow().as_ref().map(|message| message.clone().into_raw()))
        .unwrap_or(std::ptr::null_mut())
}

/// Create an engine from a TOML config file.
///
/// # Safety
/// `config_path` must be a valid NUL-terminated string and `out_engine` a
/// valid pointer; the returned handle must be released with
/// [`trustrail_engine_free`].
#[no_mangle]
pub unsafe extern "C" fn trustrail_engine_new(
    config_path: *const c_char,
    out_engine: *mut *mut TrustrailEngine,
) -> TrustrailStatus {
    if out_engine.is_null() {
        set_error("null output pointer");
        return TrustrailStatus::NullArgument;
    }
    let path = match unsafe { read_str(config_path) } {
        Ok(path) => path,
        Err(status) => return status,
    };
    let config = match Config::load(path) {
        Ok(config) => config,
        Err(e) => {
            set_error(e.to_string());
            return TrustrailStatus::Config;
        }
    };
    match TrustrailEngine::from_config(config) {
        Ok(engine) => {
            unsafe { *out_engine = Box::into_raw(Box::new(engine)) };
            TrustrailStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            TrustrailStatus::Config
        }
    }
}

/// Create an engine from built-in defaults (reference providers, empty
/// knowledge base).
///
/// # Safety
/// `out_engine` must be a valid pointer; release the handle with
/// [`trustrail_engine_free`].
#[no_mangle]
pub unsafe extern "C" fn trustrail_engine_new_default(
    out_engine: *mut *mut TrustrailEngine,
) -> TrustrailStatus {
    if out_engine.is_null() {
        set_error("null output pointer");
        return TrustrailStatus::NullArgument;
    }
    let config = match Config::from_toml_str("") {
        Ok(config) => config,
        Err(e) => {
            set_error(e.to_string());
            return TrustrailStatus::Config;
        }
    };
    match TrustrailEngine::from_config(config) {
        Ok(engine) => {
            unsafe { *out_engine = Box::into_raw(Box::new(engine)) };
            TrustrailStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            TrustrailStatus::Config
        }
    }
}

/// Release an engine handle. Null is a no-op.
///
/// # Safety
/// `engine` must have come from an engine constructor and not have been
/// freed already.
#[no_mangle]
pub unsafe extern "C" fn trustrail_engine_free(engine: *mut TrustrailEngine) {
    if !engine.is_null() {
        drop(unsafe { Box::from_raw(engine) });
    }
}

/// Evaluate one message for a user. On success writes a JSON object
/// `{"decision": ..., "session_status": ...}` to `out_json`.
///
/// # Safety
/// `engine` must be a live handle; string arguments must be valid
/// NUL-terminated strings (`group` may be null for the default group);
/// `out_json` must be valid and its result freed with
/// [`trustrail_string_free`].
#[no_mangle]
pub unsafe extern "C" fn trustrail_evaluate(
    engine: *mut TrustrailEngine,
    user_id: *const c_char,
    group: *const c_char,
    message: *const c_char,
    out_json: *mut *mut c_char,
) -> TrustrailStatus {
    let Some(handle) = (unsafe { engine.as_ref() }) else {
        set_error("null engine handle");
        return TrustrailStatus::NullArgument;
    };
    let user_id = match unsafe { read_str(user_id) } {
        Ok(value) => value,
        Err(status) => return status,
    };
    let group = if group.is_null() {
        "default"
    } else {
        match unsafe { read_str(group) } {
            Ok(value) => value,
            Err(status) => return status,
        }
    };
    let message = match unsafe { read_str(message) } {
        Ok(value) => value,
        Err(status) => return status,
    };

    let mut users = handle.users.lock().expect("user map poisoned");
    let entry = users.entry(user_id.to_string()).or_insert_with(|| UserEntry {
        trust: TrustState::new(),
        reval: RevalidationState::new(user_id),
    });
    match handle.engine.evaluate(
        UserContext { user_id, group },
        message,
        &mut entry.trust,
        &mut entry.reval,
        &handle.registry,
    ) {
        Ok(decision) => {
            let body = serde_json::json!({
                "decision": decision,
                "session_status": entry.trust.status(),
            });
            write_string(out_json, body.to_string())
        }
        Err(GuardrailError::SessionClosed { status }) => {
            set_error(format!("session closed ({status})"));
            TrustrailStatus::SessionClosed
        }
        Err(GuardrailError::EmptyInput) => {
            set_error("message is empty");
            TrustrailStatus::Validation
        }
        Err(e) => {
            set_error(e.to_string());
            TrustrailStatus::Internal
        }
    }
}

/// Register a TTP attestation from its JSON document. Writes the stored
/// id to `out_id` when non-null.
///
/// # Safety
/// `engine` must be a live handle and `attestation_json` a valid
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn trustrail_register_attestation(
    engine: *mut TrustrailEngine,
    attestation_json: *const c_char,
    out_id: *mut u64,
) -> TrustrailStatus {
    let Some(handle) = (unsafe { engine.as_ref() }) else {
        set_error("null engine handle");
        return TrustrailStatus::NullArgument;
    };
    let json = match unsafe { read_str(attestation_json) } {
        Ok(value) => value,
        Err(status) => return status,
    };
    let attestation: TtpAttestation = match serde_json::from_str(json) {
        Ok(value) => value,
        Err(e) => {
            set_error(format!("attestation JSON: {e}"));
            return TrustrailStatus::Json;
        }
    };
    match handle.registry.register(attestation) {
        Ok(id) => {
            if !out_id.is_null() {
                unsafe { *out_id = id.0 };
            }
            TrustrailStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            TrustrailStatus::Validation
        }
    }
}

/// Re-validate a user against their fresh attestations; resets the
/// high-risk budget and re-opens a locked session.
///
/// # Safety
/// `engine` must be a live handle and `user_id` a valid NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn trustrail_revalidate(
    engine: *mut TrustrailEngine,
    user_id: *const c_char,
) -> TrustrailStatus {
    let Some(handle) = (unsafe { engine.as_ref() }) else {
        set_error("null engine handle");
        return TrustrailStatus::NullArgument;
    };
    let user_id = match unsafe { read_str(user_id) } {
        Ok(value) => value,
        Err(status) => return status,
    };
    let mut users = handle.users.lock().expect("user map poisoned");
    let entry = users.entry(user_id.to_string()).or_insert_with(|| UserEntry {
        trust: TrustState::new(),
        reval: RevalidationState::new(user_id),
    });
    match handle.engine.revalidate(user_id, &mut entry.trust, &mut entry.reval, &handle.registry)
    {
        Ok(_) => TrustrailStatus::Ok,
        Err(e) => {
            set_error(e.to_string());
            TrustrailStatus::Validation
        }
    }
}

/// Read a user's trust report as JSON: snapshot, session status, and
/// high-risk count.
///
/// # Safety
/// `engine` must be a live handle, `user_id` a valid NUL-terminated
/// string, and `out_json`'s result freed with [`trustrail_string_free`].
#[no_mangle]
pub unsafe extern "C" fn trustrail_trust_report(
    engine: *mut TrustrailEngine,
    user_id: *const c_char,
    out_json: *mut *mut c_char,
) -> TrustrailStatus {
    let Some(handle) = (unsafe { engine.as_ref() }) else {
        set_error("null engine handle");
        return TrustrailStatus::NullArgument;
    };
    let user_id = match unsafe { read_str(user_id) } {
        Ok(value) => value,
        Err(status) => return status,
    };
    let users = handle.users.lock().expect("user map poisoned");
    let Some(entry) = users.get(user_id) else {
        if handle.registry.count_for(user_id) == 0 {
            set_error(format!("unknown user `{user_id}`"));
            return TrustrailStatus::NotFound;
        }
        let body = serde_json::json!({
            "snapshot": trustrail::trust::TrustSnapshot::default(),
            "session_status": "active",
            "high_risk_count": 0,
        });
        return write_string(out_json, body.to_string());
    };
    let body = serde_json::json!({
        "snapshot": entry.trust.snapshot(),
        "session_status": entry.trust.status(),
        "high_risk_count": entry.reval.high_risk_count_since_validation,
    });
    write_string(out_json, body.to_string())
}

/// Free a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must have been returned by a trustrail function and not freed
/// before.
#[no_mangle]
pub unsafe extern "C" fn trustrail_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
