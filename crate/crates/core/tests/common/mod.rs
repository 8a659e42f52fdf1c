#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use nullframe_core::exprparse::parse_in;
use nullframe_core::exprparse::Var;
use nullframe_core::helix::{flat_frame, HelixSpec};
use nullframe_core::nullframe::NullCurve;
use nullframe_core::semimetric::MetricField;
use nullframe_core::submanifold::Immersion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn lorentz3() -> MetricField {
    MetricField::diag(&[-1.0, -1.0, 1.0]).unwrap()
}

pub fn flat4() -> MetricField {
    MetricField::diag(&[-1.0, -1.0, 1.0, 1.0]).unwrap()
}

pub fn c1_curve() -> NullCurve {
    let comps = ["cos(t)", "sin(t)", "t"]
        .iter()
        .map(|s| parse_in(s, &[Var::T]).unwrap())
        .collect();
    NullCurve::position(lorentz3(), comps, (0.0, 2.0 * PI)).unwrap()
}

pub fn nonhelix_curve() -> NullCurve {
    let comps = ["cos(t^2)", "sin(t^2)", "1"]
        .iter()
        .map(|s| parse_in(s, &[Var::T]).unwrap())
        .collect();
    NullCurve::tangent(lorentz3(), comps, vec![0.0; 3], (0.0, 2.0), 1e-3).unwrap()
}

/// C1 as a helix spec: `γ(t) = (cos t, sin t, t)`.
pub fn c1_spec(t1: f64) -> HelixSpec {
    HelixSpec {
        metric: lorentz3(),
        h: 0.0,
        k1: 1.0,
        k2: -0.5,
        initial_point: vec![1.0, 0.0, 0.0],
        zeta: vec![0.0, 1.0, 1.0],
        n: vec![0.0, -0.5, 0.5],
        w: vec![-1.0, 0.0, 0.0],
        domain: (0.0, t1),
        step: 1e-3,
    }
}

/// Constant-curvature specs in `diag(−1,−1,1)` with `|h| ≤ 1`,
/// `0.1 ≤ k₁ ≤ 2`, `|k₂| ≤ 1` and a rotated flat initial frame.
pub fn random_specs(count: usize, seed: u64, domain: (f64, f64)) -> Vec<HelixSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let h = rng.gen_range(-1.0..=1.0);
            let k1 = rng.gen_range(0.1..=2.0);
            let k2 = rng.gen_range(-1.0..=1.0);
            let theta = rng.gen_range(0.0..2.0 * PI);
            let [zeta, n, w] = flat_frame(theta, 1.0);
            HelixSpec {
                metric: lorentz3(),
                h,
                k1,
                k2,
                initial_point: vec![0.0; 3],
                zeta,
                n,
                w,
                domain,
                step: 1e-3,
            }
        })
        .collect()
}

pub fn immersion(dim: usize, map: &[&str], ambient: MetricField) -> Immersion {
    Immersion::parse(dim, map, ambient).unwrap()
}

pub fn slice() -> Immersion {
    immersion(3, &["u1", "u2", "u3", "0"], flat4())
}

pub fn graph() -> Immersion {
    immersion(3, &["u1", "u2", "u3", "u3^2/2"], flat4())
}

pub fn sphere() -> Immersion {
    immersion(
        2,
        &["2*sin(u1)*cos(u2)", "2*sin(u1)*sin(u2)", "2*cos(u1)"],
        MetricField::diag(&[1.0, 1.0, 1.0]).unwrap(),
    )
}

pub fn cylinder() -> Immersion {
    immersion(
        2,
        &["cos(u1)", "sin(u1)", "u2"],
        MetricField::diag(&[1.0, 1.0, 1.0]).unwrap(),
    )
}

pub fn pseudosphere() -> Immersion {
    immersion(
        3,
        &[
            "sinh(u1)*cos(u2)",
            "sinh(u1)*sin(u2)",
            "cosh(u1)*cos(u3)",
            "cosh(u1)*sin(u3)",
        ],
        flat4(),
    )
}
