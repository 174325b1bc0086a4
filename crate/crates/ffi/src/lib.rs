//! C ABI for `creadet`.
//!
//! Every fallible function returns a [`CreadetStatus`]; on failure a
//! human-readable message is available from [`creadet_last_error`] on the
//! same thread. Objects are opaque handles created by `*_new`/`*_fit`/...
//! and released with the matching `*_free`. Outputs are written through
//! pointer arguments and only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use creadet::creativity::{self, CreativityError, EvalPoints, ModelClass, Variant, Window, WindowSpec};
use creadet::markov::{EventStream, FitOptions, MarkovError, MarkovModel};
use creadet::stats::{self, CountVector, StatisticKind, StatsError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CreadetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// An observed event has probability zero under the model.
    ZeroProbability = 3,
    /// A transition leaves a state whose row was never observed in fitting.
    UnobservedRow = 4,
    /// The alternative hypothesis gives zero probability to observed data.
    InfiniteEvidence = 5,
    NoConvergence = 6,
    InvalidJson = 7,
    /// A caller-provided buffer is too small.
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CreadetStatistic {
    Chi2 = 0,
    G = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CreadetVariant {
    SplitVsPooled = 0,
    SplitVsFuture = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CreadetModelClass {
    Markov = 0,
    Multinomial = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CreadetTestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub reject_null: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CreadetRecord {
    pub t: usize,
    pub c: f64,
    pub nu: usize,
    pub c_scaled: f64,
}

/// Scan configuration. A window of 0 means "all history" (past) or "to the
/// end of the stream" (future).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CreadetScanOptions {
    pub kappa: usize,
    pub tau: usize,
    /// Evaluate only where the previous event is an off-screen state.
    pub offscreen_only: bool,
    pub variant: CreadetVariant,
    pub model_class: CreadetModelClass,
    pub pseudocount: f64,
}

/// Opaque fitted Markov chain.
pub struct CreadetModel(MarkovModel);
/// Opaque session-split event stream.
pub struct CreadetStream(EventStream);
/// Opaque creativity trace.
pub struct CreadetTrace(creativity::CreativityTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

/// Message for the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn creadet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

struct Failure(CreadetStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(CreadetStatus::NullPointer, format!("{what} is NULL"))
    }

    fn invalid(msg: impl Into<String>) -> Self {
        Failure(CreadetStatus::InvalidArgument, msg.into())
    }
}

fn markov_status(e: &MarkovError) -> CreadetStatus {
    match e {
        MarkovError::ZeroProbability { .. } => CreadetStatus::ZeroProbability,
        MarkovError::UnobservedRow(_) => CreadetStatus::UnobservedRow,
        MarkovError::Json(_) => CreadetStatus::InvalidJson,
        _ => CreadetStatus::InvalidArgument,
    }
}

fn stats_status(e: &StatsError) -> CreadetStatus {
    match e {
        StatsError::InfiniteEvidence { .. } => CreadetStatus::InfiniteEvidence,
        StatsError::NoConvergence(_) => CreadetStatus::NoConvergence,
        _ => CreadetStatus::InvalidArgument,
    }
}

impl From<MarkovError> for Failure {
    fn from(e: MarkovError) -> Self {
        Failure(markov_status(&e), e.to_string())
    }
}

impl From<StatsError> for Failure {
    fn from(e: StatsError) -> Self {
        Failure(stats_status(&e), e.to_string())
    }
}

impl From<CreativityError> for Failure {
    fn from(e: CreativityError) -> Self {
        let status = match &e {
            CreativityError::InfiniteEvidence { .. } => CreadetStatus::InfiniteEvidence,
            CreativityError::Markov(m) => markov_status(m),
            CreativityError::Stats(s) => stats_status(s),
            _ => CreadetStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CreadetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CreadetStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            CreadetStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn counts(p: *const f64, n: usize, what: &str) -> Result<CountVector, Failure> {
    Ok(CountVector::new(slice(p, n, what)?.to_vec())?)
}

unsafe fn build_stream(
    n_states: usize,
    events: *const usize,
    n_events: usize,
    session_starts: *const usize,
    n_sessions: usize,
) -> Result<EventStream, Failure> {
    let events = slice(events, n_events, "events")?.to_vec();
    let starts = slice(session_starts, n_sessions, "session_starts")?.to_vec();
    Ok(EventStream::from_parts(n_states, events, starts)?)
}

// ---- statistics -----------------------------------------------------------

/// Two-way log likelihood ratio L between histograms `r` and `s` of `n` bins.
///
/// # Safety
/// `r` and `s` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn creadet_two_way_lr(r: *const f64, s: *const f64, n: usize, out: *mut f64) -> CreadetStatus {
    guard(|| write(out, stats::two_way_likelihood_ratio(&counts(r, n, "r")?, &counts(s, n, "s")?)?))
}

/// G = 2L for two histograms.
///
/// # Safety
/// As [`creadet_two_way_lr`].
#[no_mangle]
pub unsafe extern "C" fn creadet_g_two_way(r: *const f64, s: *const f64, n: usize, out: *mut f64) -> CreadetStatus {
    guard(|| write(out, stats::g_two_way(&counts(r, n, "r")?, &counts(s, n, "s")?)?))
}

/// Pearson χ² for two histograms.
///
/// # Safety
/// As [`creadet_two_way_lr`].
#[no_mangle]
pub unsafe extern "C" fn creadet_chi2_two_way(r: *const f64, s: *const f64, n: usize, out: *mut f64) -> CreadetStatus {
    guard(|| write(out, stats::chi2_two_way(&counts(r, n, "r")?, &counts(s, n, "s")?)?))
}

/// Degrees of freedom: bins occupied in either histogram.
///
/// # Safety
/// As [`creadet_two_way_lr`].
#[no_mangle]
pub unsafe extern "C" fn creadet_degrees_of_freedom(r: *const f64, s: *const f64, n: usize, out: *mut usize) -> CreadetStatus {
    guard(|| write(out, stats::degrees_of_freedom(&counts(r, n, "r")?, &counts(s, n, "s")?)?))
}

/// Upper tail P(X ≥ x) of a χ² distribution with `df` degrees of freedom.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn creadet_chi2_survival(x: f64, df: usize, out: *mut f64) -> CreadetStatus {
    guard(|| write(out, stats::chi2_survival(x, df)?))
}

/// Applies the rejection rule for `kind` and computes the p-value.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn creadet_decide(statistic: f64, df: usize, kind: CreadetStatistic, out: *mut CreadetTestResult) -> CreadetStatus {
    guard(|| {
        let kind = match kind {
            CreadetStatistic::Chi2 => StatisticKind::Chi2,
            CreadetStatistic::G => StatisticKind::G,
        };
        let r = stats::decide(statistic, df, kind)?;
        write(out, CreadetTestResult { statistic: r.statistic, df: r.df, p_value: r.p_value, reject_null: r.reject_null })
    })
}

// ---- event streams --------------------------------------------------------

/// Builds a stream from flat `events` and the offsets where sessions start
/// (the first offset must be 0).
///
/// # Safety
/// `events` must point to `n_events` values, `session_starts` to
/// `n_sessions` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn creadet_stream_new(
    n_states: usize,
    events: *const usize,
    n_events: usize,
    session_starts: *const usize,
    n_sessions: usize,
    out: *mut *mut CreadetStream,
) -> CreadetStatus {
    guard(|| {
        let stream = build_stream(n_states, events, n_events, session_starts, n_sessions)?;
        write(out, Box::into_raw(Box::new(CreadetStream(stream))))
    })
}

/// Number of events in the stream (0 for NULL).
///
/// # Safety
/// `stream` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn creadet_stream_len(stream: *const CreadetStream) -> usize {
    stream.as_ref().map_or(0, |s| s.0.len())
}

/// Number of sessions in the stream (0 for NULL).
///
/// # Safety
/// `stream` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn creadet_stream_n_sessions(stream: *const CreadetStream) -> usize {
    stream.as_ref().map_or(0, |s| s.0.n_sessions())
}

/// Copies the events into `buf`, which must hold `creadet_stream_len` values.
///
/// # Safety
/// `stream` must be a live handle and `buf` must point to `cap` writable values.
#[no_mangle]
pub unsafe extern "C" fn creadet_stream_copy_events(stream: *const CreadetStream, buf: *mut usize, cap: usize) -> CreadetStatus {
    guard(|| copy_out(deref(stream, "stream")?.0.events(), buf, cap))
}

/// Copies the session start offsets into `buf` (`creadet_stream_n_sessions` values).
///
/// # Safety
/// As [`creadet_stream_copy_events`].
#[no_mangle]
pub unsafe extern "C" fn creadet_stream_copy_session_starts(stream: *const CreadetStream, buf: *mut usize, cap: usize) -> CreadetStatus {
    guard(|| copy_out(deref(stream, "stream")?.0.session_starts(), buf, cap))
}

unsafe fn copy_out(src: &[usize], buf: *mut usize, cap: usize) -> Result<(), Failure> {
    if cap < src.len() {
        return Err(Failure(CreadetStatus::BufferTooSmall, format!("buffer holds {cap}, need {}", src.len())));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(Failure::null("buf"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

/// # Safety
/// `stream` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn creadet_stream_free(stream: *mut CreadetStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

// ---- Markov models --------------------------------------------------------

/// Maximum-likelihood fit with additive smoothing `pseudocount` (≥ 0).
///
/// # Safety
/// `stream` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn creadet_model_fit(stream: *const CreadetStream, pseudocount: f64, out: *mut *mut CreadetModel) -> CreadetStatus {
    guard(|| {
        let stream = &deref(stream, "stream")?.0;
        let opts = FitOptions::with_pseudocount(pseudocount)?;
        let model = creadet::markov::fit(stream, stream.n_states(), opts)?;
        write(out, Box::into_raw(Box::new(CreadetModel(model))))
    })
}

/// Parses a model from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn creadet_model_from_json(json: *const c_char, out: *mut *mut CreadetModel) -> CreadetStatus {
    guard(|| {
        if json.is_null() {
            return Err(Failure::null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| Failure::invalid(format!("json is not UTF-8: {e}")))?;
        let model = MarkovModel::from_json(text)?;
        write(out, Box::into_raw(Box::new(CreadetModel(model))))
    })
}

/// Serializes a model to JSON; release the string with [`creadet_string_free`].
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn creadet_model_to_json(model: *const CreadetModel, out: *mut *mut c_char) -> CreadetStatus {
    guard(|| {
        let json = deref(model, "model")?.0.to_json();
        let s = CString::new(json).map_err(|e| Failure::invalid(e.to_string()))?;
        write(out, s.into_raw())
    })
}

/// Number of states of the model (0 for NULL).
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn creadet_model_n_states(model: *const CreadetModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.n_states())
}

/// Natural-log likelihood of `stream` under `model`.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn creadet_model_log_likelihood(
    model: *const CreadetModel,
    stream: *const CreadetStream,
    out: *mut f64,
) -> CreadetStatus {
    guard(|| write(out, deref(model, "model")?.0.log_likelihood(&deref(stream, "stream")?.0)?))
}

/// Adds `epsilon` to every parameter and renormalizes, giving a new model.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn creadet_model_perturb(model: *const CreadetModel, epsilon: f64, out: *mut *mut CreadetModel) -> CreadetStatus {
    guard(|| {
        let m = deref(model, "model")?.0.perturb(epsilon)?;
        write(out, Box::into_raw(Box::new(CreadetModel(m))))
    })
}

/// Samples one session per entry of `session_lengths`, deterministically in `seed`.
///
/// # Safety
/// `model` must be a live handle, `session_lengths` must point to
/// `n_sessions` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn creadet_model_sample(
    model: *const CreadetModel,
    session_lengths: *const usize,
    n_sessions: usize,
    seed: u64,
    out: *mut *mut CreadetStream,
) -> CreadetStatus {
    guard(|| {
        let lengths = slice(session_lengths, n_sessions, "session_lengths")?;
        let stream = deref(model, "model")?.0.sample(lengths, seed)?;
        write(out, Box::into_raw(Box::new(CreadetStream(stream))))
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn creadet_model_free(model: *mut CreadetModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn creadet_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---- creativity traces ----------------------------------------------------

/// Computes the creativity trace of `stream`.
///
/// # Safety
/// `stream` and `options` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn creadet_scan(
    stream: *const CreadetStream,
    options: *const CreadetScanOptions,
    out: *mut *mut CreadetTrace,
) -> CreadetStatus {
    guard(|| {
        let stream = &deref(stream, "stream")?.0;
        let o = deref(options, "options")?;
        let window = |n: usize| if n == 0 { Window::All } else { Window::Fixed(n) };
        let spec = WindowSpec {
            kappa: window(o.kappa),
            tau: window(o.tau),
            eval_points: if o.offscreen_only { EvalPoints::OffScreen } else { EvalPoints::All },
            variant: match o.variant {
                CreadetVariant::SplitVsPooled => Variant::SplitVsPooled,
                CreadetVariant::SplitVsFuture => Variant::SplitVsFuture,
            },
        };
        let class = match o.model_class {
            CreadetModelClass::Markov => ModelClass::Markov,
            CreadetModelClass::Multinomial => ModelClass::Multinomial,
        };
        let opts = FitOptions::with_pseudocount(o.pseudocount)?;
        let trace = creativity::scan(stream, &spec, class, opts)?;
        write(out, Box::into_raw(Box::new(CreadetTrace(trace))))
    })
}

/// Number of records in the trace (0 for NULL).
///
/// # Safety
/// `trace` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn creadet_trace_len(trace: *const CreadetTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.records.len())
}

/// Record `index` of the trace.
///
/// # Safety
/// `trace` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn creadet_trace_get(trace: *const CreadetTrace, index: usize, out: *mut CreadetRecord) -> CreadetStatus {
    guard(|| {
        let records = &deref(trace, "trace")?.0.records;
        let r = records.get(index).ok_or_else(|| Failure::invalid(format!("index {index} out of range for {} records", records.len())))?;
        write(out, CreadetRecord { t: r.t, c: r.c, nu: r.nu, c_scaled: r.c_scaled })
    })
}

/// Record with the largest scaled creativity (earliest on ties).
///
/// # Safety
/// `trace` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn creadet_trace_argmax(trace: *const CreadetTrace, out: *mut CreadetRecord) -> CreadetStatus {
    guard(|| {
        let r = deref(trace, "trace")?.0.argmax().ok_or_else(|| Failure::invalid("trace is empty"))?;
        write(out, CreadetRecord { t: r.t, c: r.c, nu: r.nu, c_scaled: r.c_scaled })
    })
}

/// # Safety
/// `trace` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn creadet_trace_free(trace: *mut CreadetTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
