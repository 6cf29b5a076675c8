//! C ABI over the ecoschool engine.
//!
//! Every function returns an [`EsStatus`]. On failure the thread's last error
//! carries a machine-readable code and a message, readable through
//! [`es_last_error_code`] and [`es_last_error_message`]. Strings handed out
//! through `out` parameters are owned by the caller and released with
//! [`es_string_free`]; handles are released with [`es_engine_free`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chrono::DateTime;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use ecoschool::ingest::{builtin, SimScenario};
use ecoschool::methodology::{reduction_fraction, BuildingProfile, DaySet};
use ecoschool::service::{
    render_json, BaselineRequest, ContrastQuery, EnergyQuery, Engine, ErrorKind, EvaluateRequest, ProgressQuery,
    ServiceError, WasteQuery,
};
use ecoschool::timeseries::{integrate_power, Point, Site, TimeseriesError, Window};

/// Opaque engine handle.
pub struct EsEngine {
    inner: Engine,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    NotFound = 3,
    Validation = 4,
    BadRequest = 5,
    Unauthorized = 6,
    Io = 7,
    Panic = 99,
}

struct LastError {
    code: CString,
    message: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<LastError>> = const { RefCell::new(None) };
}

fn cstring(s: &str) -> CString {
    CString::new(s.replace('\0', " ")).expect("interior nul removed")
}

fn set_error(status: EsStatus, code: &str, message: &str) -> EsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(LastError { code: cstring(code), message: cstring(message) }));
    status
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(kind: ErrorKind) -> EsStatus {
    match kind {
        ErrorKind::NotFound => EsStatus::NotFound,
        ErrorKind::Validation => EsStatus::Validation,
        ErrorKind::BadRequest => EsStatus::BadRequest,
        ErrorKind::Unauthorized => EsStatus::Unauthorized,
        ErrorKind::Io => EsStatus::Io,
    }
}

struct Failure(EsStatus, String, String);

impl From<ServiceError> for Failure {
    fn from(e: ServiceError) -> Self {
        Failure(status_of(e.kind), e.code, e.message)
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> EsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EsStatus::Ok,
        Ok(Err(Failure(status, code, message))) => set_error(status, &code, &message),
        Err(_) => set_error(EsStatus::Panic, "Panic", "internal error"),
    }
}

fn null(what: &str) -> Failure {
    Failure(EsStatus::NullArgument, "NullArgument".into(), format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(EsStatus::InvalidUtf8, "InvalidUtf8".into(), format!("{what} is not UTF-8")))
}

unsafe fn engine<'a>(h: *const EsEngine) -> FfiResult<&'a Engine> {
    h.as_ref().map(|h| &h.inner).ok_or_else(|| null("engine"))
}

unsafe fn put_string(out: *mut *mut c_char, s: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = cstring(s).into_raw();
    Ok(())
}

fn json<T: DeserializeOwned>(s: &str) -> FfiResult<T> {
    let s = if s.trim().is_empty() { "{}" } else { s };
    serde_json::from_str(s).map_err(|e| Failure(EsStatus::BadRequest, "InvalidBody".into(), e.to_string()))
}

/// Code of the last failure on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn es_last_error_code() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |e| e.code.as_ptr()))
}

/// Message of the last failure on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn es_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |e| e.message.as_ptr()))
}

/// Static version string.
#[no_mangle]
pub extern "C" fn es_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opens (or creates) a store directory.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_engine_open(path: *const c_char, out: *mut *mut EsEngine) -> EsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = Engine::open(path)?;
        *out = Box::into_raw(Box::new(EsEngine { inner }));
        Ok(())
    })
}

/// A store that lives only as long as the handle.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_engine_in_memory(out: *mut *mut EsEngine) -> EsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(EsEngine { inner: Engine::in_memory() }));
        Ok(())
    })
}

/// # Safety
/// `engine` must come from `es_engine_open`/`es_engine_in_memory` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn es_engine_free(engine: *mut EsEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn es_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Registers a JSON site document; `out_json` receives the summary.
///
/// # Safety
/// Pointers must be valid; `site_json` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn es_register_site(
    engine: *const EsEngine,
    site_json: *const c_char,
    out_json: *mut *mut c_char,
) -> EsStatus {
    guard(|| {
        let e = self::engine(engine)?;
        let site: Site = json(str_arg(site_json, "site_json")?)?;
        put_string(out_json, &render_json(&e.register_site(site)?))
    })
}

/// Registers a JSON building profile; `out_json` receives the stored version.
///
/// # Safety
/// Pointers must be valid; `profile_json` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn es_register_profile(
    engine: *const EsEngine,
    profile_json: *const c_char,
    out_json: *mut *mut c_char,
) -> EsStatus {
    guard(|| {
        let e = self::engine(engine)?;
        let profile: BuildingProfile = json(str_arg(profile_json, "profile_json")?)?;
        put_string(out_json, &render_json(&e.register_profile(profile)?))
    })
}

/// Ingests `len` bytes of CSV. `out_json` receives the session summary even
/// when the session aborts, in which case the status is `BadRequest`.
///
/// # Safety
/// `data` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn es_ingest_csv(
    engine: *const EsEngine,
    data: *const u8,
    len: usize,
    out_json: *mut *mut c_char,
) -> EsStatus {
    guard(|| {
        let e = self::engine(engine)?;
        if data.is_null() && len > 0 {
            return Err(null("data"));
        }
        let bytes = if len == 0 { &[][..] } else { std::slice::from_raw_parts(data, len) };
        let summary = e.ingest(bytes)?;
        put_string(out_json, &render_json(&summary))?;
        match &summary.aborted {
            Some(reason) => Err(Failure(EsStatus::BadRequest, "SessionAborted".into(), reason.clone())),
            None => Ok(()),
        }
    })
}

/// Runs a built-in scenario by name, or a JSON scenario document. With
/// `ingest` nonzero the site is registered and the stream stored.
/// `out_csv` receives the generated stream.
///
/// # Safety
/// Pointers must be valid; `scenario` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn es_simulate(
    engine: *const EsEngine,
    scenario: *const c_char,
    ingest: i32,
    out_csv: *mut *mut c_char,
) -> EsStatus {
    guard(|| {
        let e = self::engine(engine)?;
        let s = str_arg(scenario, "scenario")?;
        let scenario: SimScenario =
            if s.trim_start().starts_with('{') { json(s)? } else { builtin(s).map_err(ServiceError::from)? };
        let (doc, _) = e.simulate(&scenario, ingest != 0)?;
        put_string(out_csv, &doc)
    })
}

#[derive(Deserialize)]
struct Targeted<Q> {
    #[serde(default)]
    building: Option<String>,
    #[serde(flatten)]
    query: Q,
}

#[derive(Deserialize)]
struct WeekRequest {
    week: String,
    #[serde(default)]
    day_set: Option<DaySet>,
}

#[derive(Deserialize, Default)]
struct ProgressRequest {
    #[serde(default)]
    weeks: Option<Vec<String>>,
    #[serde(default)]
    groups: BTreeMap<String, String>,
}

fn query(e: &Engine, op: &str, request: &str) -> FfiResult<String> {
    fn run<Q: DeserializeOwned, T: serde::Serialize>(
        e: &Engine,
        request: &str,
        f: impl FnOnce(&Engine, &ecoschool::timeseries::BuildingId, Q) -> Result<T, ServiceError>,
    ) -> FfiResult<String> {
        let t: Targeted<Q> = json(request)?;
        let id = e.resolve_building(t.building.as_deref())?;
        Ok(render_json(&f(e, &id, t.query)?))
    }
    match op {
        "buildings" => Ok(render_json(&e.buildings())),
        "energy" => run(e, request, |e, id, q: EnergyQuery| e.energy(id, &q)),
        "baseline" => run(e, request, |e, id, q: BaselineRequest| e.baseline(id, q)),
        "analyze_week" => run(e, request, |e, id, q: WeekRequest| e.week_analysis(id, &q.week, q.day_set)),
        "evaluate" => run(e, request, |e, id, q: EvaluateRequest| e.evaluate(id, q)),
        "waste" => run(e, request, |e, id, q: WasteQuery| e.waste(id, &q)),
        "contrast" => run(e, request, |e, id, q: ContrastQuery| e.contrast(id, &q)),
        "progress" => run(e, request, |e, id, q: ProgressRequest| {
            e.progress(id, &ProgressQuery { weeks: q.weeks, groups: q.groups })
        }),
        "live" => run(e, request, |e, id, _: serde_json::Value| e.live(id)),
        "report" => run(e, request, |e, id, _: serde_json::Value| e.report(id)),
        "export" => {
            let t: Targeted<serde_json::Value> = json(request)?;
            let id = t.building.as_deref().map(|b| e.resolve_building(Some(b))).transpose()?;
            Ok(e.export(id.as_ref())?)
        }
        other => Err(Failure(EsStatus::BadRequest, "UnknownOperation".into(), format!("unknown operation {other:?}"))),
    }
}

/// Runs one analysis and returns the same JSON body the HTTP service sends.
///
/// `operation` is one of `buildings`, `energy`, `baseline`, `analyze_week`,
/// `evaluate`, `waste`, `contrast`, `progress`, `live`, `report`, `export`.
/// `request_json` holds the operation's parameters plus an optional
/// `building`; null or empty means `{}`. `export` returns CSV.
///
/// # Safety
/// Pointers must be valid; strings nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn es_query(
    engine: *const EsEngine,
    operation: *const c_char,
    request_json: *const c_char,
    out: *mut *mut c_char,
) -> EsStatus {
    guard(|| {
        let e = self::engine(engine)?;
        let op = str_arg(operation, "operation")?;
        let request = if request_json.is_null() { "" } else { str_arg(request_json, "request_json")? };
        put_string(out, &query(e, op, request)?)
    })
}

/// Trapezoidal energy in kWh of `n` power samples (W at Unix seconds, ascending)
/// over `[window_start, window_end]`. Stretches longer than `max_gap_secs`
/// are not integrated; then the status is `Validation` with code
/// `GapExceeded` and the outputs hold the covered part.
///
/// # Safety
/// `ts` and `watts` must point to `n` values; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_integrate_power(
    ts: *const i64,
    watts: *const f64,
    n: usize,
    window_start: i64,
    window_end: i64,
    max_gap_secs: i64,
    out_kwh: *mut f64,
    out_coverage: *mut f64,
) -> EsStatus {
    guard(|| {
        if out_kwh.is_null() || out_coverage.is_null() {
            return Err(null("output"));
        }
        if n > 0 && (ts.is_null() || watts.is_null()) {
            return Err(null("samples"));
        }
        let at = |s: i64| {
            DateTime::from_timestamp(s, 0)
                .ok_or_else(|| Failure(EsStatus::Validation, "InvalidTimestamp".into(), format!("{s}")))
        };
        let (ts, watts) = if n == 0 {
            (&[][..], &[][..])
        } else {
            (std::slice::from_raw_parts(ts, n), std::slice::from_raw_parts(watts, n))
        };
        let mut points = Vec::with_capacity(n);
        for (&t, &w) in ts.iter().zip(watts) {
            if !w.is_finite() || w < 0.0 {
                return Err(Failure(EsStatus::Validation, "InvalidValue".into(), format!("power {w} at {t}")));
            }
            points.push(Point::new(at(t)?, w));
        }
        if points.windows(2).any(|p| p[1].at <= p[0].at) {
            return Err(Failure(EsStatus::Validation, "Unordered".into(), "timestamps must ascend".into()));
        }
        let window = Window::new(at(window_start)?, at(window_end)?);
        match integrate_power(&points, window, max_gap_secs) {
            Ok(e) => {
                *out_kwh = e.kwh;
                *out_coverage = e.coverage();
                Ok(())
            }
            Err(TimeseriesError::GapExceeded { partial, .. }) => {
                *out_kwh = partial.kwh;
                *out_coverage = partial.coverage();
                Err(Failure(EsStatus::Validation, "GapExceeded".into(), "gap longer than max_gap_secs".into()))
            }
            Err(err) => Err(Failure(EsStatus::Validation, err.code().into(), err.to_string())),
        }
    })
}

/// Reduction of flexible consumption, `1 - saving / comparison`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_reduction_fraction(comparison: f64, saving: f64, out: *mut f64) -> EsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = reduction_fraction(comparison, saving).map_err(ServiceError::from)?;
        Ok(())
    })
}
