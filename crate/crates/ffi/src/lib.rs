//! C ABI over the analysis engine.
//!
//! Every function returns a [`UdmStatus`]; on failure a message is available
//! from [`udm_last_error`] on the same thread. Objects are opaque handles
//! released with their `_free` function, and strings handed out by the
//! library are released with [`udm_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use udm_core::frontend::{load_audio, AudioBuffer};
use udm_core::report::{canonicalize, reanalyzed, render_alignment_svg, AnalysisConfig, AnalysisReport, Stage, SvgOptions};
use udm_core::{Analyzer, PhonemeInventory, ReportError, Thresholds};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UdmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Audio = 4,
    Pipeline = 5,
    Json = 6,
    Io = 7,
    Panic = 8,
}

pub struct UdmAnalyzer {
    inner: Analyzer,
}

pub struct UdmReport {
    inner: AnalysisReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(UdmStatus, String);

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        let status = match &e {
            ReportError::Thresholds(_) => UdmStatus::InvalidArgument,
            ReportError::Json(_) | ReportError::InvalidReport(_) => UdmStatus::Json,
            ReportError::Io(_) => UdmStatus::Io,
            _ => match e.stage() {
                Some(Stage::Audio) => UdmStatus::Audio,
                Some(_) => UdmStatus::Pipeline,
                None => UdmStatus::InvalidArgument,
            },
        };
        let msg = match e.stage() {
            Some(stage) => format!("{stage}: {e}"),
            None => e.to_string(),
        };
        Failure(status, msg)
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> UdmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            UdmStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            UdmStatus::Panic
        }
    }
}

unsafe fn string_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(UdmStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(UdmStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn optional_string<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        string_arg(p, name).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(UdmStatus::NullPointer, format!("{name} is null")))
}

fn out_ptr<T>(out: *mut T) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure(UdmStatus::NullPointer, "output pointer is null".into()))
    } else {
        Ok(())
    }
}

fn bad_arg(e: impl std::fmt::Display) -> Failure {
    Failure(UdmStatus::InvalidArgument, e.to_string())
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(UdmStatus::Json, "output contains a NUL byte".into()))
}

fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn udm_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn udm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an analyzer. Both JSON arguments may be null: the demo inventory
/// and the default analysis configuration are used instead.
#[no_mangle]
pub unsafe extern "C" fn udm_analyzer_new(
    inventory_json: *const c_char,
    config_json: *const c_char,
    out: *mut *mut UdmAnalyzer,
) -> UdmStatus {
    guard(|| {
        out_ptr(out)?;
        let inventory = match optional_string(inventory_json, "inventory_json")? {
            Some(text) => PhonemeInventory::from_json(text).map_err(bad_arg)?,
            None => PhonemeInventory::demo(),
        };
        let config: AnalysisConfig = match optional_string(config_json, "config_json")? {
            Some(text) => serde_json::from_str(text).map_err(|e| Failure(UdmStatus::Json, e.to_string()))?,
            None => AnalysisConfig::default(),
        };
        let boxed = Box::new(UdmAnalyzer {
            inner: Analyzer::new(inventory, config),
        });
        *out = Box::into_raw(boxed);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn udm_analyzer_free(analyzer: *mut UdmAnalyzer) {
    if !analyzer.is_null() {
        drop(Box::from_raw(analyzer));
    }
}

fn analyze(a: &UdmAnalyzer, audio: &AudioBuffer, path: &str, transcript: &str) -> Result<*mut UdmReport, Failure> {
    let report = a.inner.analyze(&new_id(), audio, path, transcript)?;
    Ok(Box::into_raw(Box::new(UdmReport { inner: report })))
}

/// Analyzes mono samples in `[-1, 1]`.
#[no_mangle]
pub unsafe extern "C" fn udm_analyze_samples(
    analyzer: *const UdmAnalyzer,
    samples: *const f64,
    len: usize,
    sample_rate: u32,
    transcript: *const c_char,
    out: *mut *mut UdmReport,
) -> UdmStatus {
    guard(|| {
        out_ptr(out)?;
        let a = handle(analyzer, "analyzer")?;
        let transcript = string_arg(transcript, "transcript")?;
        if samples.is_null() && len > 0 {
            return Err(Failure(UdmStatus::NullPointer, "samples is null".into()));
        }
        let data = if len == 0 { Vec::new() } else { std::slice::from_raw_parts(samples, len).to_vec() };
        let audio = AudioBuffer::new(data, sample_rate).map_err(|e| Failure(UdmStatus::Audio, e.to_string()))?;
        *out = analyze(a, &audio, "", transcript)?;
        Ok(())
    })
}

/// Analyzes a WAV file.
#[no_mangle]
pub unsafe extern "C" fn udm_analyze_wav(
    analyzer: *const UdmAnalyzer,
    path: *const c_char,
    transcript: *const c_char,
    out: *mut *mut UdmReport,
) -> UdmStatus {
    guard(|| {
        out_ptr(out)?;
        let a = handle(analyzer, "analyzer")?;
        let path = string_arg(path, "path")?;
        let transcript = string_arg(transcript, "transcript")?;
        let audio = load_audio(path).map_err(|e| Failure(UdmStatus::Audio, e.to_string()))?;
        *out = analyze(a, &audio, path, transcript)?;
        Ok(())
    })
}

/// Parses and validates a report.
#[no_mangle]
pub unsafe extern "C" fn udm_report_from_json(json: *const c_char, out: *mut *mut UdmReport) -> UdmStatus {
    guard(|| {
        out_ptr(out)?;
        let report = AnalysisReport::from_json(string_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(UdmReport { inner: report }));
        Ok(())
    })
}

/// Canonical JSON of a report; release with `udm_string_free`.
#[no_mangle]
pub unsafe extern "C" fn udm_report_to_json(report: *const UdmReport, out: *mut *mut c_char) -> UdmStatus {
    guard(|| {
        out_ptr(out)?;
        *out = into_c_string(handle(report, "report")?.inner.to_canonical_json())?;
        Ok(())
    })
}

/// Alignment view as SVG; release with `udm_string_free`.
#[no_mangle]
pub unsafe extern "C" fn udm_report_svg(report: *const UdmReport, out: *mut *mut c_char) -> UdmStatus {
    guard(|| {
        out_ptr(out)?;
        let r = handle(report, "report")?;
        *out = into_c_string(render_alignment_svg(&r.inner, &SvgOptions::default()))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn udm_report_event_count(report: *const UdmReport, out: *mut usize) -> UdmStatus {
    guard(|| {
        out_ptr(out)?;
        *out = handle(report, "report")?.inner.events.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn udm_report_version(report: *const UdmReport, out: *mut u64) -> UdmStatus {
    guard(|| {
        out_ptr(out)?;
        *out = handle(report, "report")?.inner.version;
        Ok(())
    })
}

/// New report version with events recomputed under `thresholds_json`.
/// The input report is left unchanged.
#[no_mangle]
pub unsafe extern "C" fn udm_report_reanalyze(
    report: *const UdmReport,
    thresholds_json: *const c_char,
    out: *mut *mut UdmReport,
) -> UdmStatus {
    guard(|| {
        out_ptr(out)?;
        let r = handle(report, "report")?;
        let th = Thresholds::from_json(string_arg(thresholds_json, "thresholds_json")?).map_err(ReportError::from)?;
        let mut next = reanalyzed(&r.inner, &th);
        next.version = r.inner.version + 1;
        let next = canonicalize(&next)?;
        *out = Box::into_raw(Box::new(UdmReport { inner: next }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn udm_report_free(report: *mut UdmReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

#[no_mangle]
pub unsafe extern "C" fn udm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
