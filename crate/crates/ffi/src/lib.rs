//! C ABI over `nullframe-core`.
//!
//! Every fallible function returns an [`NfStatus`]; on anything but
//! `NF_STATUS_OK` (and `NF_STATUS_CHECK_FAILED`, which still produces a
//! report) the message is available from [`nf_last_error`] on the same
//! thread. Handles are opaque, owned by the caller and released with the
//! matching `*_free`. Pointer arguments must be valid for the stated
//! lengths; strings are NUL-terminated UTF-8. Null handles and null output
//! pointers are rejected with `NF_STATUS_NULL_POINTER`.
#![allow(clippy::missing_safety_doc)]

use std::cell::{OnceCell, RefCell};
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nullframe_core::cli::{self, CliError, Command, Flags};
use nullframe_core::exprparse::{parse_in, Var};
use nullframe_core::helix::{self, HelixError, HelixSpec, HelixTrace, SynthConfig, DRIFT_LIMIT};
use nullframe_core::nullframe::{CurvatureSample, FrameError, NullCurve, ScreenPolicy};
use nullframe_core::semimetric::{MetricError, MetricField};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NfStatus {
    Ok = 0,
    /// A report was produced but at least one check exceeded its tolerance.
    CheckFailed = 1,
    NullPointer = 2,
    /// Bad UTF-8, wrong length, index out of range or an unparsable expression.
    InvalidArgument = 3,
    /// A rejected spec document or run option.
    Spec = 4,
    Metric = 5,
    Frame = 6,
    Helix = 7,
    /// A numerical limit was exceeded before a report could be produced.
    Residual = 8,
    Panic = 9,
}

pub struct NfMetric(MetricField);

pub struct NfCurve(NullCurve);

pub struct NfTrace {
    trace: HelixTrace,
    curvatures: OnceCell<Vec<CurvatureSample>>,
}

/// Frame and curvatures of a null curve at one parameter value.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NfFrame {
    pub t: f64,
    pub point: [f64; 3],
    pub zeta: [f64; 3],
    pub n: [f64; 3],
    pub w: [f64; 3],
    pub h: f64,
    pub k1: f64,
    pub k2: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NfHelixParams {
    pub h: f64,
    pub k1: f64,
    pub k2: f64,
    pub initial_point: [f64; 3],
    pub zeta: [f64; 3],
    pub n: [f64; 3],
    pub w: [f64; 3],
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
    /// Re-project `N`, `W` every this many steps; 0 turns projection off.
    pub project_every: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NfTraceSample {
    pub t: f64,
    pub point: [f64; 3],
    pub zeta: [f64; 3],
    pub n: [f64; 3],
    pub w: [f64; 3],
    pub gram_drift: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NfCurvature {
    pub t: f64,
    pub h: f64,
    pub k1: f64,
    pub k2: f64,
}

struct Failure {
    status: NfStatus,
    message: String,
}

impl Failure {
    fn new(status: NfStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<MetricError> for Failure {
    fn from(e: MetricError) -> Self {
        Failure::new(NfStatus::Metric, e.to_string())
    }
}

impl From<FrameError> for Failure {
    fn from(e: FrameError) -> Self {
        Failure::new(NfStatus::Frame, e.to_string())
    }
}

impl From<HelixError> for Failure {
    fn from(e: HelixError) -> Self {
        Failure::new(NfStatus::Helix, e.to_string())
    }
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        let status = match e {
            CliError::Spec(_) => NfStatus::Spec,
            CliError::Residual(_) => NfStatus::Residual,
        };
        Failure::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<NfStatus, Failure>) -> NfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => {
            set_last_error("");
            status
        }
        Ok(Err(e)) => {
            set_last_error(&e.message);
            e.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            NfStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::new(NfStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure::new(NfStatus::InvalidArgument, message)
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn as_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn arr3(v: &[f64]) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

unsafe fn components(
    ptr: *const *const c_char,
    count: usize,
) -> Result<Vec<nullframe_core::exprparse::Expr>, Failure> {
    as_slice(ptr, count, "components")?
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let text = as_str(p, &format!("components[{i}]"))?;
            parse_in(text, &[Var::T]).map_err(|e| invalid(format!("components[{i}]: {e}")))
        })
        .collect()
}

/// Message for the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn nf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn nf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn nf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Constant diagonal metric `diag(signs)`.
#[no_mangle]
pub unsafe extern "C" fn nf_metric_diag(
    signs: *const f64,
    len: usize,
    out: *mut *mut NfMetric,
) -> NfStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let m = MetricField::diag(as_slice(signs, len, "signs")?)?;
        *out = Box::into_raw(Box::new(NfMetric(m)));
        Ok(NfStatus::Ok)
    })
}

/// Metric from the JSON accepted in spec documents, e.g.
/// `{"type":"diag","signs":[-1,-1,1]}` or `{"type":"field","entries":[[...]]}`.
#[no_mangle]
pub unsafe extern "C" fn nf_metric_from_json(
    json: *const c_char,
    out: *mut *mut NfMetric,
) -> NfStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let value: serde_json::Value = serde_json::from_str(as_str(json, "json")?)
            .map_err(|e| Failure::new(NfStatus::Spec, format!("invalid JSON: {e}")))?;
        let m = cli::metric_from_json(&value, "metric")?;
        *out = Box::into_raw(Box::new(NfMetric(m)));
        Ok(NfStatus::Ok)
    })
}

/// Chart dimension, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn nf_metric_dim(metric: *const NfMetric) -> usize {
    metric.as_ref().map_or(0, |m| m.0.dim())
}

/// `Γᵏᵢⱼ` at `point`, written to `out[(k·n + i)·n + j]`; `out_len` must be `n³`.
#[no_mangle]
pub unsafe extern "C" fn nf_metric_christoffel(
    metric: *const NfMetric,
    point: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> NfStatus {
    guard(|| {
        let m = &as_ref(metric, "metric")?.0;
        let n = m.dim();
        if len != n {
            return Err(invalid(format!(
                "point has length {len}, metric has dimension {n}"
            )));
        }
        if out_len != n * n * n {
            return Err(invalid(format!(
                "out has length {out_len}, need {}",
                n * n * n
            )));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let gamma = m.christoffel_at(as_slice(point, len, "point")?)?;
        let out = std::slice::from_raw_parts_mut(out, out_len);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out[(k * n + i) * n + j] = gamma.get(k, i, j);
                }
            }
        }
        Ok(NfStatus::Ok)
    })
}

#[no_mangle]
pub unsafe extern "C" fn nf_metric_free(metric: *mut NfMetric) {
    if !metric.is_null() {
        drop(Box::from_raw(metric));
    }
}

/// Curve `γ(t)` from three component expressions in `t`. The metric is copied.
#[no_mangle]
pub unsafe extern "C" fn nf_curve_position(
    metric: *const NfMetric,
    components_ptr: *const *const c_char,
    count: usize,
    t0: f64,
    t1: f64,
    out: *mut *mut NfCurve,
) -> NfStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let m = as_ref(metric, "metric")?.0.clone();
        let c = NullCurve::position(m, components(components_ptr, count)?, (t0, t1))?;
        *out = Box::into_raw(Box::new(NfCurve(c)));
        Ok(NfStatus::Ok)
    })
}

/// Curve given by its tangent `ζ(t)` and `γ(t0) = initial` (three values).
#[no_mangle]
pub unsafe extern "C" fn nf_curve_tangent(
    metric: *const NfMetric,
    components_ptr: *const *const c_char,
    count: usize,
    initial: *const f64,
    t0: f64,
    t1: f64,
    step: f64,
    out: *mut *mut NfCurve,
) -> NfStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let m = as_ref(metric, "metric")?.0.clone();
        let x0 = as_slice(initial, 3, "initial")?.to_vec();
        let c = NullCurve::tangent(m, components(components_ptr, count)?, x0, (t0, t1), step)?;
        *out = Box::into_raw(Box::new(NfCurve(c)));
        Ok(NfStatus::Ok)
    })
}

/// Frame and curvatures at `t`. `seed_order` may be null for the default `e3,e1,e2`.
#[no_mangle]
pub unsafe extern "C" fn nf_curve_frame(
    curve: *const NfCurve,
    t: f64,
    seed_order: *const c_char,
    out: *mut NfFrame,
) -> NfStatus {
    guard(|| {
        let c = &as_ref(curve, "curve")?.0;
        let out = as_mut(out, "out")?;
        let policy: ScreenPolicy = if seed_order.is_null() {
            ScreenPolicy::default()
        } else {
            as_str(seed_order, "seed_order")?.parse()?
        };
        let f = c.build_frame(t, &policy)?;
        let k = c.curvatures_at(&f)?;
        *out = NfFrame {
            t,
            point: arr3(&f.point),
            zeta: arr3(&f.zeta),
            n: arr3(&f.n),
            w: arr3(&f.w),
            h: k.h,
            k1: k.k1,
            k2: k.k2,
        };
        Ok(NfStatus::Ok)
    })
}

#[no_mangle]
pub unsafe extern "C" fn nf_curve_free(curve: *mut NfCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Integrates a helix with constant curvatures and records `samples`
/// uniformly spaced states on `[t0, t1]`.
#[no_mangle]
pub unsafe extern "C" fn nf_helix_synthesize(
    metric: *const NfMetric,
    params: *const NfHelixParams,
    samples: usize,
    out: *mut *mut NfTrace,
) -> NfStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        let p = as_ref(params, "params")?;
        if samples < 2 {
            return Err(invalid(format!("need at least 2 samples, got {samples}")));
        }
        let spec = HelixSpec {
            metric: as_ref(metric, "metric")?.0.clone(),
            h: p.h,
            k1: p.k1,
            k2: p.k2,
            initial_point: p.initial_point.to_vec(),
            zeta: p.zeta.to_vec(),
            n: p.n.to_vec(),
            w: p.w.to_vec(),
            domain: (p.t0, p.t1),
            step: p.step,
        };
        let config = SynthConfig {
            project_every: (p.project_every > 0).then_some(p.project_every),
            drift_limit: DRIFT_LIMIT,
        };
        let trace = helix::synthesize(&spec, &helix::trace_grid(&spec, samples), &config)?;
        *out = Box::into_raw(Box::new(NfTrace {
            trace,
            curvatures: OnceCell::new(),
        }));
        Ok(NfStatus::Ok)
    })
}

/// Number of samples, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn nf_trace_len(trace: *const NfTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.len())
}

#[no_mangle]
pub unsafe extern "C" fn nf_trace_sample(
    trace: *const NfTrace,
    index: usize,
    out: *mut NfTraceSample,
) -> NfStatus {
    guard(|| {
        let tr = &as_ref(trace, "trace")?.trace;
        let out = as_mut(out, "out")?;
        let s = tr
            .samples
            .get(index)
            .ok_or_else(|| invalid(format!("index {index} out of range 0..{}", tr.len())))?;
        *out = NfTraceSample {
            t: s.t,
            point: arr3(&s.point),
            zeta: arr3(&s.zeta),
            n: arr3(&s.n),
            w: arr3(&s.w),
            gram_drift: s.gram_drift,
        };
        Ok(NfStatus::Ok)
    })
}

/// Curvatures recovered from the trace by finite differences at one sample.
/// The first call computes every sample.
#[no_mangle]
pub unsafe extern "C" fn nf_trace_curvature(
    trace: *const NfTrace,
    index: usize,
    out: *mut NfCurvature,
) -> NfStatus {
    guard(|| {
        let tr = as_ref(trace, "trace")?;
        let out = as_mut(out, "out")?;
        if index >= tr.trace.len() {
            return Err(invalid(format!(
                "index {index} out of range 0..{}",
                tr.trace.len()
            )));
        }
        let all = match tr.curvatures.get() {
            Some(v) => v,
            None => {
                let v = tr.trace.curvature_samples()?;
                tr.curvatures.get_or_init(|| v)
            }
        };
        let k = all[index];
        *out = NfCurvature {
            t: k.t,
            h: k.h,
            k1: k.k1,
            k2: k.k2,
        };
        Ok(NfStatus::Ok)
    })
}

/// Largest deviation between recovered and prescribed curvatures.
#[no_mangle]
pub unsafe extern "C" fn nf_trace_round_trip(trace: *const NfTrace, out: *mut f64) -> NfStatus {
    guard(|| {
        let tr = &as_ref(trace, "trace")?.trace;
        let out = as_mut(out, "out")?;
        *out = helix::round_trip_deviation(tr)?;
        Ok(NfStatus::Ok)
    })
}

#[no_mangle]
pub unsafe extern "C" fn nf_trace_free(trace: *mut NfTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Runs a CLI command (`frame`, `synth`, `verify`, `submanifold`,
/// `transfer`) on an in-memory spec document with default flags. On
/// `NF_STATUS_OK` or `NF_STATUS_CHECK_FAILED` the JSON report is written to
/// `*report` and must be released with [`nf_string_free`].
#[no_mangle]
pub unsafe extern "C" fn nf_run_spec(
    command: *const c_char,
    spec_json: *const c_char,
    report: *mut *mut c_char,
) -> NfStatus {
    guard(|| {
        let out = as_mut(report, "report")?;
        *out = std::ptr::null_mut();
        let name = as_str(command, "command")?;
        let cmd = Command::from_name(name, Flags::default())
            .ok_or_else(|| invalid(format!("unknown command `{name}`")))?;
        let spec = as_str(spec_json, "spec_json")?;
        let r = cli::execute_bytes(&cmd, spec.as_bytes())?;
        let text = CString::new(r.to_json()).map_err(|e| invalid(e.to_string()))?;
        *out = text.into_raw();
        if r.summary.pass {
            Ok(NfStatus::Ok)
        } else {
            Err(Failure::new(NfStatus::CheckFailed, failed_checks(&r)))
        }
    })
}

fn failed_checks(r: &cli::Report) -> String {
    r.summary
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{} = {:e} exceeds {:e}", c.name, c.value, c.tol))
        .collect::<Vec<_>>()
        .join("; ")
}
