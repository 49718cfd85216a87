//! C interface to affectloop.
//!
//! Every fallible call returns an [`AlStatus`]; on failure the message is
//! available from [`al_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their matching `_free` function.
//! Strings returned to the caller are owned by the caller and released with
//! [`al_string_free`].

use affectloop::design::{Catalog, DesignConfig};
use affectloop::session::{advance, prompt_for, AffectModelPair, SessionEvent, SessionState};
use affectloop::signal::{extract_band_powers, PipelineConfig};
use affectloop::{AffectClass, EegEpoch, FeatureVector, N_CHANNELS};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};

pub const AL_N_BANDS: usize = 3;
pub const AL_N_FEATURES: usize = 96;
pub const AL_N_COLOR_SLOTS: usize = 3;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Model = 4,
    Transition = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// Arousal and valence estimate. Classes are -1 (low), 0 (neutral), +1 (high);
/// scores are ordered low, neutral, high.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AlPrediction {
    pub arousal: i32,
    pub valence: i32,
    pub arousal_scores: [f64; 3],
    pub valence_scores: [f64; 3],
}

/// Component indices of one design in the built-in catalog.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AlDesign {
    pub envelope: u32,
    pub layout: u32,
    pub fixture: u32,
    pub colors: [u32; AL_N_COLOR_SLOTS],
}

/// Trained arousal and valence classifiers.
pub struct AlModelPair(AffectModelPair);

/// Session protocol state.
pub struct AlSession(SessionState);

struct Failure(AlStatus, String);

type Outcome<T = ()> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn run(body: impl FnOnce() -> Outcome + UnwindSafe) -> AlStatus {
    match catch_unwind(body) {
        Ok(Ok(())) => AlStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            AlStatus::Panic
        }
    }
}

fn non_null<'a, T>(ptr: *const T, name: &str) -> Outcome<&'a T> {
    unsafe { ptr.as_ref() }.ok_or_else(|| Failure(AlStatus::NullPointer, format!("{name} is null")))
}

fn non_null_mut<'a, T>(ptr: *mut T, name: &str) -> Outcome<&'a mut T> {
    unsafe { ptr.as_mut() }.ok_or_else(|| Failure(AlStatus::NullPointer, format!("{name} is null")))
}

fn read_str<'a>(ptr: *const c_char, name: &str) -> Outcome<&'a str> {
    non_null(ptr, name)?;
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|e| Failure(AlStatus::InvalidArgument, format!("{name} is not UTF-8: {e}")))
}

fn read_slice<'a>(ptr: *const f64, len: usize, name: &str) -> Outcome<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(ptr, name)?;
    Ok(unsafe { std::slice::from_raw_parts(ptr, len) })
}

fn into_c_string(text: String) -> Outcome<*mut c_char> {
    CString::new(text).map(CString::into_raw).map_err(|e| Failure(AlStatus::InvalidArgument, e.to_string()))
}

fn class_from_code(code: i32) -> Outcome<AffectClass> {
    AffectClass::from_code(code as i64)
        .ok_or_else(|| Failure(AlStatus::InvalidArgument, format!("class code {code} is not -1, 0 or 1")))
}

/// Message for the most recent failure on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn al_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn al_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Parses a model pair written by `affectloop train` (model.json).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn al_model_load_json(json: *const c_char, out: *mut *mut AlModelPair) -> AlStatus {
    run(|| {
        let out = non_null_mut(out, "out")?;
        let text = read_str(json, "json")?;
        let pair: AffectModelPair = serde_json::from_str(text).map_err(|e| Failure(AlStatus::Parse, e.to_string()))?;
        pair.validate().map_err(|e| Failure(AlStatus::Model, e.to_string()))?;
        *out = Box::into_raw(Box::new(AlModelPair(pair)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`al_model_load_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn al_model_free(model: *mut AlModelPair) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Classifies one log band-power feature vector of length [`AL_N_FEATURES`].
///
/// # Safety
/// `features` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn al_model_predict(
    model: *const AlModelPair,
    features: *const f64,
    len: usize,
    out: *mut AlPrediction,
) -> AlStatus {
    run(|| {
        let model = non_null(model, "model")?;
        let out = non_null_mut(out, "out")?;
        let features = read_slice(features, len, "features")?;
        let (arousal, valence) = model.0.predict(features).map_err(|e| Failure(AlStatus::Model, e.to_string()))?;
        *out = AlPrediction {
            arousal: arousal.class.code() as i32,
            valence: valence.class.code() as i32,
            arousal_scores: arousal.scores,
            valence_scores: valence.scores,
        };
        Ok(())
    })
}

/// Welch band powers (theta, alpha, beta) of one preprocessed 2 s window.
///
/// `data` is channel-major: `n_channels` rows of `n_samples` µV values,
/// with `n_samples` equal to two seconds at `sample_rate`.
/// `out` receives `n_channels * 3` powers, index `channel * 3 + band`.
/// With `log_features` set the values are the log10 features the
/// classifiers consume.
///
/// # Safety
/// `data` must hold `n_channels * n_samples` doubles and `out` `out_len`.
#[no_mangle]
pub unsafe extern "C" fn al_band_powers(
    data: *const f64,
    n_channels: usize,
    n_samples: usize,
    sample_rate: f64,
    log_features: bool,
    out: *mut f64,
    out_len: usize,
) -> AlStatus {
    run(|| {
        if n_channels != N_CHANNELS {
            return Err(Failure(AlStatus::InvalidArgument, format!("expected {N_CHANNELS} channels, got {n_channels}")));
        }
        let expected = n_channels * AL_N_BANDS;
        if out_len < expected {
            return Err(Failure(AlStatus::InvalidArgument, format!("out holds {out_len} values, need {expected}")));
        }
        let total = n_channels.checked_mul(n_samples).ok_or_else(|| Failure(AlStatus::InvalidArgument, "size overflow".into()))?;
        let samples = read_slice(data, total, "data")?;
        non_null_mut(out, "out")?;
        let rows = if n_samples == 0 { vec![Vec::new(); n_channels] } else { samples.chunks(n_samples).map(<[f64]>::to_vec).collect() };
        let epoch = EegEpoch::new(0.0, sample_rate, rows).map_err(|e| Failure(AlStatus::InvalidArgument, e.to_string()))?;
        let config = PipelineConfig { sample_rate, ..PipelineConfig::default() };
        let powers = extract_band_powers(&epoch, &config).map_err(|e| Failure(AlStatus::InvalidArgument, e.to_string()))?;
        let values = if log_features { FeatureVector::from_band_powers(&powers, None).values } else { powers.flatten() };
        unsafe { std::slice::from_raw_parts_mut(out, expected) }.copy_from_slice(&values);
        Ok(())
    })
}

/// Number of distinct designs in the built-in catalog.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn al_design_count(out: *mut u64) -> AlStatus {
    run(|| {
        let out = non_null_mut(out, "out")?;
        *out = Catalog::default().total_combinations().map_err(|e| Failure(AlStatus::OutOfRange, e.to_string()))?;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn al_design_from_index(index: u64, out: *mut AlDesign) -> AlStatus {
    run(|| {
        let out = non_null_mut(out, "out")?;
        let design = Catalog::default().index_to_config(index).map_err(|e| Failure(AlStatus::OutOfRange, e.to_string()))?;
        let mut colors = [0u32; AL_N_COLOR_SLOTS];
        for (slot, &c) in colors.iter_mut().zip(&design.colors) {
            *slot = c as u32;
        }
        *out = AlDesign { envelope: design.envelope as u32, layout: design.layout as u32, fixture: design.fixture as u32, colors };
        Ok(())
    })
}

/// # Safety
/// `design` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn al_design_to_index(design: *const AlDesign, out: *mut u64) -> AlStatus {
    run(|| {
        let d = non_null(design, "design")?;
        let out = non_null_mut(out, "out")?;
        let config = DesignConfig {
            envelope: d.envelope as usize,
            layout: d.layout as usize,
            fixture: d.fixture as usize,
            colors: d.colors.iter().map(|&c| c as usize).collect(),
        };
        *out = Catalog::default().config_to_index(&config).map_err(|e| Failure(AlStatus::OutOfRange, e.to_string()))?;
        Ok(())
    })
}

/// Agree-probe question for a predicted class pair.
///
/// # Safety
/// `out` must be writable; the string is freed with [`al_string_free`].
#[no_mangle]
pub unsafe extern "C" fn al_prompt_text(arousal: i32, valence: i32, out: *mut *mut c_char) -> AlStatus {
    run(|| {
        let out = non_null_mut(out, "out")?;
        let text = prompt_for(class_from_code(arousal)?, class_from_code(valence)?);
        *out = into_c_string(text)?;
        Ok(())
    })
}

/// A session in its idle state.
#[no_mangle]
pub extern "C" fn al_session_new() -> *mut AlSession {
    Box::into_raw(Box::new(AlSession(SessionState::default())))
}

/// # Safety
/// `session` must come from [`al_session_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn al_session_free(session: *mut AlSession) {
    if !session.is_null() {
        drop(unsafe { Box::from_raw(session) });
    }
}

/// Applies one event, e.g. `{"kind":"StartSession"}`, at stream time `t`.
/// The session is unchanged on failure.
///
/// # Safety
/// `session` must be a live handle and `event_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn al_session_advance(session: *mut AlSession, event_json: *const c_char, t: f64) -> AlStatus {
    run(|| {
        let session = non_null_mut(session, "session")?;
        let event: SessionEvent =
            serde_json::from_str(read_str(event_json, "event_json")?).map_err(|e| Failure(AlStatus::Parse, e.to_string()))?;
        session.0 = advance(&session.0, &event, t).map_err(|e| Failure(AlStatus::Transition, e.to_string()))?;
        Ok(())
    })
}

/// Serializes the full session state as JSON.
///
/// # Safety
/// `session` must be a live handle; `out` must be writable. The string is
/// freed with [`al_string_free`].
#[no_mangle]
pub unsafe extern "C" fn al_session_state_json(session: *const AlSession, out: *mut *mut c_char) -> AlStatus {
    run(|| {
        let session = non_null(session, "session")?;
        let out = non_null_mut(out, "out")?;
        let json = serde_json::to_string(&session.0).map_err(|e| Failure(AlStatus::Parse, e.to_string()))?;
        *out = into_c_string(json)?;
        Ok(())
    })
}
