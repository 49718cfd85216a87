use affectloop_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn last_error() -> String {
    let p = al_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { al_string_free(p) };
    s
}

#[test]
fn design_index_round_trip() {
    let mut count = 0u64;
    assert_eq!(unsafe { al_design_count(&mut count) }, AlStatus::Ok);
    assert_eq!(count, 35_726_880);
    for index in [0, 1, 12_345, count / 2, count - 1] {
        let mut design = AlDesign::default();
        assert_eq!(unsafe { al_design_from_index(index, &mut design) }, AlStatus::Ok);
        let mut back = 0u64;
        assert_eq!(unsafe { al_design_to_index(&design, &mut back) }, AlStatus::Ok);
        assert_eq!(back, index);
    }
    let mut design = AlDesign::default();
    assert_eq!(unsafe { al_design_from_index(count, &mut design) }, AlStatus::OutOfRange);
    assert!(!last_error().is_empty());
}

#[test]
fn null_pointers_are_rejected() {
    assert_eq!(unsafe { al_design_count(ptr::null_mut()) }, AlStatus::NullPointer);
    assert_eq!(last_error(), "out is null");
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { al_model_load_json(ptr::null(), &mut model) }, AlStatus::NullPointer);
    assert!(model.is_null());
    unsafe {
        al_model_free(ptr::null_mut());
        al_session_free(ptr::null_mut());
        al_string_free(ptr::null_mut());
    }
}

#[test]
fn band_powers_of_alpha_sine() {
    let fs = 250.0;
    let n = 500;
    let row: Vec<f64> = (0..n).map(|i| 10.0 * (2.0 * std::f64::consts::PI * 10.0 * i as f64 / fs).sin()).collect();
    let data: Vec<f64> = (0..32).flat_map(|_| row.iter().copied()).collect();
    let mut out = vec![0.0; AL_N_FEATURES];
    let status = unsafe { al_band_powers(data.as_ptr(), 32, n, fs, false, out.as_mut_ptr(), out.len()) };
    assert_eq!(status, AlStatus::Ok);
    for ch in 0..32 {
        let (theta, alpha, beta) = (out[ch * 3], out[ch * 3 + 1], out[ch * 3 + 2]);
        assert!((alpha - 50.0).abs() < 2.5, "alpha {alpha}");
        assert!(theta < 1.0 && beta < 1.0);
    }
    let mut logs = vec![0.0; AL_N_FEATURES];
    let status = unsafe { al_band_powers(data.as_ptr(), 32, n, fs, true, logs.as_mut_ptr(), logs.len()) };
    assert_eq!(status, AlStatus::Ok);
    assert!((logs[1] - out[1].log10()).abs() < 1e-6);

    let status = unsafe { al_band_powers(data.as_ptr(), 32, n - 1, fs, false, out.as_mut_ptr(), out.len()) };
    assert_eq!(status, AlStatus::InvalidArgument);
    let status = unsafe { al_band_powers(data.as_ptr(), 31, n, fs, false, out.as_mut_ptr(), out.len()) };
    assert_eq!(status, AlStatus::InvalidArgument);
}

#[test]
fn prompt_text_for_classes() {
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { al_prompt_text(1, -1, &mut text) }, AlStatus::Ok);
    let expected = affectloop::session::prompt_for(affectloop::AffectClass::High, affectloop::AffectClass::Low);
    assert_eq!(take_string(text), expected);
    assert_eq!(unsafe { al_prompt_text(2, 0, &mut text) }, AlStatus::InvalidArgument);
}

#[test]
fn session_advances_and_rejects_illegal_events() {
    let session = al_session_new();
    let start = CString::new(r#"{"kind":"StartSession"}"#).unwrap();
    let shown = CString::new(r#"{"kind":"StimulusShown"}"#).unwrap();
    unsafe {
        assert_eq!(al_session_advance(session, start.as_ptr(), 0.0), AlStatus::Ok);
        assert_eq!(al_session_advance(session, start.as_ptr(), 1.0), AlStatus::Transition);
        assert!(last_error().contains("StartSession"));
        assert_eq!(al_session_advance(session, shown.as_ptr(), 2.0), AlStatus::Ok);
        let bad = CString::new("{").unwrap();
        assert_eq!(al_session_advance(session, bad.as_ptr(), 3.0), AlStatus::Parse);

        let mut json = ptr::null_mut();
        assert_eq!(al_session_state_json(session, &mut json), AlStatus::Ok);
        let state: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
        assert_eq!(state["last_event_time"], 2.0);
        al_session_free(session);
    }
}

#[test]
fn model_from_json_matches_library_prediction() {
    use affectloop::features::train_ecoc;
    use affectloop::session::AffectModelPair;
    use affectloop::{AffectClass, FeatureVector};
    let classes = [AffectClass::Low, AffectClass::Neutral, AffectClass::High];
    let windows: Vec<FeatureVector> = (0..60)
        .map(|i| {
            let class = classes[i % 3];
            let mut values: Vec<f64> = (0..AL_N_FEATURES).map(|j| ((i * 31 + j * 17) % 23) as f64 / 23.0).collect();
            values[5] += 3.0 * class.code() as f64;
            FeatureVector::new(i as f64, values, Some(class)).unwrap()
        })
        .collect();
    let model = train_ecoc(&windows, 8, 1.0).unwrap();
    let pair = AffectModelPair { arousal: model.clone(), valence: model, pipeline: Default::default() };
    let json = CString::new(serde_json::to_string(&pair).unwrap()).unwrap();

    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { al_model_load_json(json.as_ptr(), &mut handle) }, AlStatus::Ok);
    for w in windows.iter().step_by(7) {
        let mut out = AlPrediction::default();
        let status = unsafe { al_model_predict(handle, w.values.as_ptr(), w.values.len(), &mut out) };
        assert_eq!(status, AlStatus::Ok);
        let (arousal, _) = pair.predict(&w.values).unwrap();
        assert_eq!(out.arousal, arousal.class.code() as i32);
        assert_eq!(out.arousal_scores, arousal.scores);
        assert_eq!(out.arousal, w.label.unwrap().code() as i32);
    }
    let mut out = AlPrediction::default();
    let short = [0.0; 10];
    assert_eq!(unsafe { al_model_predict(handle, short.as_ptr(), short.len(), &mut out) }, AlStatus::Model);
    unsafe { al_model_free(handle) };

    let junk = CString::new(r#"{"arousal": 1}"#).unwrap();
    assert_eq!(unsafe { al_model_load_json(junk.as_ptr(), &mut handle) }, AlStatus::Parse);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/affectloop.h")).unwrap();
    for name in [
        "al_last_error_message",
        "al_string_free",
        "al_model_load_json",
        "al_model_predict",
        "al_model_free",
        "al_band_powers",
        "al_design_count",
        "al_design_from_index",
        "al_design_to_index",
        "al_prompt_text",
        "al_session_new",
        "al_session_advance",
        "al_session_state_json",
        "al_session_free",
        "AL_STATUS_TRANSITION",
        "typedef struct AlSession AlSession",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
