use std::ffi::{c_char, CStr, CString};
use std::ptr;

use nullframe::*;

fn fixture(name: &str) -> CString {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name);
    CString::new(std::fs::read(path).unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(nf_last_error()) }
        .to_str()
        .unwrap()
        .to_string()
}

fn polar() -> *mut NfMetric {
    let json = c"{\"type\":\"field\",\"entries\":[[\"-1\",\"0\",\"0\"],[\"0\",\"-x1^2\",\"0\"],[\"0\",\"0\",\"1\"]]}";
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { nf_metric_from_json(json.as_ptr(), &mut m) },
        NfStatus::Ok
    );
    m
}

fn lorentz() -> *mut NfMetric {
    let mut m = ptr::null_mut();
    let signs = [-1.0, -1.0, 1.0];
    assert_eq!(
        unsafe { nf_metric_diag(signs.as_ptr(), 3, &mut m) },
        NfStatus::Ok
    );
    m
}

fn c1_params(t1: f64) -> NfHelixParams {
    NfHelixParams {
        h: 0.0,
        k1: 1.0,
        k2: -0.5,
        initial_point: [1.0, 0.0, 0.0],
        zeta: [0.0, 1.0, 1.0],
        n: [0.0, -0.5, 0.5],
        w: [-1.0, 0.0, 0.0],
        t0: 0.0,
        t1,
        step: 1e-3,
        project_every: 0,
    }
}

#[test]
fn christoffel_layout_is_k_major() {
    let m = polar();
    let mut gamma = [0.0; 27];
    let p = [2.0, 0.3, -1.0];
    unsafe {
        assert_eq!(nf_metric_dim(m), 3);
        assert_eq!(
            nf_metric_christoffel(m, p.as_ptr(), 3, gamma.as_mut_ptr(), 27),
            NfStatus::Ok
        );
        // Γ⁰₁₁ = −x1, Γ¹₀₁ = Γ¹₁₀ = 1/x1 for diag(−1, −x1², 1).
        for (idx, &v) in gamma.iter().enumerate() {
            let expected = match idx {
                4 => -2.0,
                10 | 12 => 0.5,
                _ => 0.0,
            };
            assert!((v - expected).abs() <= 1e-14, "index {idx}: {v}");
        }
        assert_eq!(
            nf_metric_christoffel(m, p.as_ptr(), 3, gamma.as_mut_ptr(), 26),
            NfStatus::InvalidArgument
        );
        assert_eq!(
            nf_metric_christoffel(m, p.as_ptr(), 2, gamma.as_mut_ptr(), 27),
            NfStatus::InvalidArgument
        );
        let origin = [0.0; 3];
        assert_eq!(
            nf_metric_christoffel(m, origin.as_ptr(), 3, gamma.as_mut_ptr(), 27),
            NfStatus::Metric
        );
        assert!(!last_error().is_empty());
        nf_metric_free(m);
    }
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(
            nf_metric_diag(ptr::null(), 3, &mut m),
            NfStatus::NullPointer
        );
        assert_eq!(last_error(), "signs is null");
        assert_eq!(
            nf_metric_from_json(ptr::null(), &mut m),
            NfStatus::NullPointer
        );
        let signs = [1.0];
        assert_eq!(
            nf_metric_diag(signs.as_ptr(), 1, ptr::null_mut()),
            NfStatus::NullPointer
        );
        assert_eq!(nf_metric_dim(ptr::null()), 0);
        assert_eq!(nf_trace_len(ptr::null()), 0);
        let mut f = NfFrame::default();
        assert_eq!(
            nf_curve_frame(ptr::null(), 0.0, ptr::null(), &mut f),
            NfStatus::NullPointer
        );
        nf_metric_free(ptr::null_mut());
        nf_curve_free(ptr::null_mut());
        nf_trace_free(ptr::null_mut());
        nf_string_free(ptr::null_mut());
    }
}

#[test]
fn metric_errors_map_to_status() {
    unsafe {
        let mut m = ptr::null_mut();
        let signs = [1.0, 0.0];
        assert_eq!(nf_metric_diag(signs.as_ptr(), 2, &mut m), NfStatus::Metric);
        assert!(m.is_null());
        let asym = c"{\"type\":\"field\",\"entries\":[[\"1\",\"x1\"],[\"x2\",\"1\"]]}";
        assert_eq!(nf_metric_from_json(asym.as_ptr(), &mut m), NfStatus::Spec);
        assert!(last_error().contains("metric not symmetric at (1,2)"));
        assert_eq!(nf_metric_from_json(c"{".as_ptr(), &mut m), NfStatus::Spec);
        let bad = [0xffu8, 0];
        assert_eq!(
            nf_metric_from_json(bad.as_ptr() as *const c_char, &mut m),
            NfStatus::InvalidArgument
        );
    }
}

#[test]
fn curve_frames_match_c1_oracle() {
    let m = lorentz();
    let comps = [c"cos(t)", c"sin(t)", c"t"];
    let ptrs: Vec<*const c_char> = comps.iter().map(|c| c.as_ptr()).collect();
    unsafe {
        let mut curve = ptr::null_mut();
        assert_eq!(
            nf_curve_position(m, ptrs.as_ptr(), 3, 0.0, 6.0, &mut curve),
            NfStatus::Ok
        );
        let mut f = NfFrame::default();
        assert_eq!(
            nf_curve_frame(curve, 0.5, ptr::null(), &mut f),
            NfStatus::Ok
        );
        assert_eq!(last_error(), "");
        assert!(f.h.abs() <= 1e-12 && (f.k1 - 1.0).abs() <= 1e-12 && (f.k2 + 0.5).abs() <= 1e-12);
        assert!((f.point[0] - 0.5f64.cos()).abs() <= 1e-15);
        let mut g = NfFrame::default();
        assert_eq!(
            nf_curve_frame(curve, 0.5, c"e3,e2,e1".as_ptr(), &mut g),
            NfStatus::Ok
        );
        assert!((g.k1.abs() - 1.0).abs() <= 1e-12);
        assert_eq!(
            nf_curve_frame(curve, 7.0, ptr::null(), &mut f),
            NfStatus::Frame
        );
        assert_eq!(
            nf_curve_frame(curve, 0.5, c"e4".as_ptr(), &mut f),
            NfStatus::Frame
        );
        nf_curve_free(curve);

        let tangent = [c"-sin(t)", c"cos(t)", c"1"];
        let ptrs: Vec<*const c_char> = tangent.iter().map(|c| c.as_ptr()).collect();
        let x0 = [1.0, 0.0, 0.0];
        assert_eq!(
            nf_curve_tangent(m, ptrs.as_ptr(), 3, x0.as_ptr(), 0.0, 2.0, 1e-3, &mut curve),
            NfStatus::Ok
        );
        assert_eq!(
            nf_curve_frame(curve, 1.0, ptr::null(), &mut f),
            NfStatus::Ok
        );
        assert!((f.point[1] - 1f64.sin()).abs() <= 1e-10);
        assert!((f.k1 - 1.0).abs() <= 1e-10);
        nf_curve_free(curve);

        let bad = [c"cos(t)", c"sin(q)", c"t"];
        let ptrs: Vec<*const c_char> = bad.iter().map(|c| c.as_ptr()).collect();
        assert_eq!(
            nf_curve_position(m, ptrs.as_ptr(), 3, 0.0, 1.0, &mut curve),
            NfStatus::InvalidArgument
        );
        assert!(last_error().starts_with("components[1]"));
        nf_metric_free(m);
    }
}

#[test]
fn helix_trace_accessors() {
    let m = lorentz();
    unsafe {
        let mut trace = ptr::null_mut();
        let p = c1_params(3.0);
        assert_eq!(nf_helix_synthesize(m, &p, 61, &mut trace), NfStatus::Ok);
        assert_eq!(nf_trace_len(trace), 61);
        let mut s = NfTraceSample::default();
        assert_eq!(nf_trace_sample(trace, 20, &mut s), NfStatus::Ok);
        assert!((s.t - 1.0).abs() <= 1e-12);
        assert!((s.point[0] - 1f64.cos()).abs() <= 1e-9);
        assert!(s.gram_drift <= 1e-10);
        assert_eq!(
            nf_trace_sample(trace, 61, &mut s),
            NfStatus::InvalidArgument
        );
        let mut k = NfCurvature::default();
        for i in [0, 30, 60] {
            assert_eq!(nf_trace_curvature(trace, i, &mut k), NfStatus::Ok);
            assert!((k.k1 - 1.0).abs() <= 1e-6 && (k.k2 + 0.5).abs() <= 1e-6 && k.h.abs() <= 1e-6);
        }
        assert_eq!(
            nf_trace_curvature(trace, 61, &mut k),
            NfStatus::InvalidArgument
        );
        let mut dev = f64::NAN;
        assert_eq!(nf_trace_round_trip(trace, &mut dev), NfStatus::Ok);
        assert!(dev <= 1e-6);
        nf_trace_free(trace);

        let mut broken = c1_params(3.0);
        broken.n = [0.0, 1.0, 1.0];
        assert_eq!(
            nf_helix_synthesize(m, &broken, 10, &mut trace),
            NfStatus::Helix
        );
        assert_eq!(
            nf_helix_synthesize(m, &p, 1, &mut trace),
            NfStatus::InvalidArgument
        );
        nf_metric_free(m);
    }
}

fn run(command: &std::ffi::CStr, spec: &CString) -> (NfStatus, Option<String>) {
    let mut report = ptr::null_mut();
    let status = unsafe { nf_run_spec(command.as_ptr(), spec.as_ptr(), &mut report) };
    let text = (!report.is_null()).then(|| {
        let s = unsafe { CStr::from_ptr(report) }
            .to_str()
            .unwrap()
            .to_string();
        unsafe { nf_string_free(report) };
        s
    });
    (status, text)
}

#[test]
fn run_spec_mirrors_cli_exit_codes() {
    let (status, report) = run(c"frame", &fixture("c1.json"));
    assert_eq!(status, NfStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&report.unwrap()).unwrap();
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["summary"]["pass"], true);

    let (status, report) = run(c"transfer", &fixture("graph_transfer.json"));
    assert_eq!(status, NfStatus::CheckFailed);
    assert!(last_error().contains("ambient_constancy"));
    let v: serde_json::Value = serde_json::from_str(&report.unwrap()).unwrap();
    assert_eq!(v["summary"]["pass"], false);

    let (status, report) = run(c"synth", &fixture("c1.json"));
    assert_eq!(status, NfStatus::Spec);
    assert!(report.is_none());
    assert!(last_error().contains("needs a helix spec"));

    assert_eq!(
        run(c"bogus", &fixture("c1.json")).0,
        NfStatus::InvalidArgument
    );

    let a = run(c"submanifold", &fixture("pseudosphere.json"));
    let b = run(c"submanifold", &fixture("pseudosphere.json"));
    assert_eq!(a.0, NfStatus::Ok);
    assert_eq!(a.1, b.1);
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(nf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
