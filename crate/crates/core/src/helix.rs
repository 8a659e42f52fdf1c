//! Null helices: integration of the Frenet system with constant curvatures,
//! curvature re-extraction from traces, and the helix identities
//!
//! ```text
//! ∇ζ∇ζ∇ζ ζ = (h² + 2k₁k₂) ∇ζ ζ
//! g(∇ζζ,∇ζζ) = −k₁²     g(∇ζN,∇ζN) = −k₂²
//! g(∇ζW,∇ζW) = 2k₁k₂    g(∇ζζ,∇ζN) = −h² − k₁k₂
//! ```

use std::io::Write;

use thiserror::Error;

use crate::exprparse::{parse_in, Expr, Jet, Var};
use crate::linalg::{self, Mat};
use crate::nullframe::{gram_deviation, CurvatureSample, FrameError, FramedJets};
use crate::ode;
use crate::semimetric::{MetricError, MetricField};
use crate::stencil::{fornberg_weights, window};

/// Default Gram drift at which integration aborts.
pub const DRIFT_LIMIT: f64 = 1e-4;
/// Gram tolerance for the initial frame.
pub const INITIAL_FRAME_TOL: f64 = 1e-10;
/// Finite-difference stencil width used on traces.
pub const STENCIL_WIDTH: usize = 9;
/// Fewest samples a trace needs for derivative estimates.
pub const MIN_STENCIL: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HelixError {
    #[error("step must be positive, got {0}")]
    BadStep(f64),
    #[error("empty domain")]
    EmptyDomain,
    #[error("helix needs a 3-dimensional metric, got dimension {0}")]
    Dimension(usize),
    #[error("{what} must have 3 components")]
    VectorLength { what: &'static str },
    #[error("initial frame violates the Gram conditions (deviation {0:e})")]
    InitialFrame(f64),
    #[error("grid value {t} lies outside the domain or is out of order")]
    BadGrid { t: f64 },
    #[error("curve left the chart near t = {t}: {source}")]
    ChartExit { t: f64, source: MetricError },
    #[error("Gram drift {value:e} exceeds the limit {limit:e} at t = {t}")]
    Drift { t: f64, value: f64, limit: f64 },
    #[error("a trace needs at least {MIN_STENCIL} samples for derivative estimates, got {0}")]
    ShortTrace(usize),
    #[error("constancy needs at least 2 samples")]
    TooFewSamples,
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Constant Frenet curvatures together with initial data.
#[derive(Clone, Debug)]
pub struct HelixSpec {
    pub metric: MetricField,
    pub h: f64,
    pub k1: f64,
    pub k2: f64,
    pub initial_point: Vec<f64>,
    pub zeta: Vec<f64>,
    pub n: Vec<f64>,
    pub w: Vec<f64>,
    pub domain: (f64, f64),
    pub step: f64,
}

impl HelixSpec {
    pub fn validate(&self) -> Result<(), HelixError> {
        if self.metric.dim() != 3 {
            return Err(HelixError::Dimension(self.metric.dim()));
        }
        for (what, v) in [
            ("initial_point", &self.initial_point),
            ("zeta", &self.zeta),
            ("n", &self.n),
            ("w", &self.w),
        ] {
            if v.len() != 3 {
                return Err(HelixError::VectorLength { what });
            }
        }
        if !(self.domain.0 < self.domain.1) {
            return Err(HelixError::EmptyDomain);
        }
        if !(self.step > 0.0) {
            return Err(HelixError::BadStep(self.step));
        }
        let g = self
            .metric
            .metric_at(&self.initial_point)
            .map_err(|source| HelixError::ChartExit {
                t: self.domain.0,
                source,
            })?;
        let dev = gram_deviation(&g, &self.zeta, &self.n, &self.w);
        if dev > INITIAL_FRAME_TOL {
            return Err(HelixError::InitialFrame(dev));
        }
        Ok(())
    }

    pub fn curvatures(&self) -> CurvatureSample {
        CurvatureSample::new(self.domain.0, self.h, self.k1, self.k2)
    }

    /// `h² + 2k₁k₂`.
    pub fn cubic_constant(&self) -> f64 {
        self.curvatures().cubic_constant()
    }
}

/// A null frame in the flat chart `diag(−1,−1,1)`:
/// `ζ = λ(cos θ, sin θ, 1)`, `N = (−cos θ, −sin θ, 1)/(2λ)`,
/// `W = (−sin θ, cos θ, 0)`.
pub fn flat_frame(theta: f64, lambda: f64) -> [Vec<f64>; 3] {
    let (s, c) = theta.sin_cos();
    [
        vec![lambda * c, lambda * s, lambda],
        vec![
            -c / (2.0 * lambda),
            -s / (2.0 * lambda),
            1.0 / (2.0 * lambda),
        ],
        vec![-s, c, 0.0],
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    /// Re-project `N` and `W` every this many steps.
    pub project_every: Option<usize>,
    pub drift_limit: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            project_every: None,
            drift_limit: DRIFT_LIMIT,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub point: Vec<f64>,
    pub zeta: Vec<f64>,
    pub n: Vec<f64>,
    pub w: Vec<f64>,
    pub gram_drift: f64,
    /// Step-doubling estimate `‖y_h − y_{h/2}‖ / 15`.
    pub error_estimate: f64,
}

#[derive(Clone, Debug)]
pub struct HelixTrace {
    pub metric: MetricField,
    pub constants: CurvatureSample,
    pub samples: Vec<TraceSample>,
    /// States half a stencil before the first and after the last sample, so
    /// derivative stencils stay centred. Empty where the chart ends.
    lead: Vec<TraceSample>,
    tail: Vec<TraceSample>,
}

fn unpack(y: &[f64]) -> (&[f64], &[f64], &[f64], &[f64]) {
    (&y[0..3], &y[3..6], &y[6..9], &y[9..12])
}

struct Integrator<'a> {
    metric: &'a MetricField,
    h: f64,
    k1: f64,
    k2: f64,
}

impl Integrator<'_> {
    fn rhs(&self, t: f64, y: &[f64]) -> Result<Vec<f64>, HelixError> {
        let (x, z, n, w) = unpack(y);
        let gamma = self
            .metric
            .christoffel_at(x)
            .map_err(|source| HelixError::ChartExit { t, source })?
            .gamma;
        let gz = gamma.contract(z, z);
        let gn = gamma.contract(z, n);
        let gw = gamma.contract(z, w);
        let mut out = Vec::with_capacity(12);
        out.extend_from_slice(z);
        out.extend((0..3).map(|k| self.h * z[k] + self.k1 * w[k] - gz[k]));
        out.extend((0..3).map(|k| -self.h * n[k] + self.k2 * w[k] - gn[k]));
        out.extend((0..3).map(|k| self.k2 * z[k] + self.k1 * n[k] - gw[k]));
        Ok(out)
    }

    fn project(&self, t: f64, y: &mut [f64]) -> Result<(), HelixError> {
        let g = self
            .metric
            .metric_at(&y[0..3])
            .map_err(|source| HelixError::ChartExit { t, source })?;
        let (z, n, w) = (y[3..6].to_vec(), y[6..9].to_vec(), y[9..12].to_vec());
        let [n, w] = reproject(&g, &z, &n, &w);
        y[6..9].copy_from_slice(&n);
        y[9..12].copy_from_slice(&w);
        Ok(())
    }

    fn drift(&self, t: f64, y: &[f64]) -> Result<f64, HelixError> {
        let (x, z, n, w) = unpack(y);
        let g = self
            .metric
            .metric_at(x)
            .map_err(|source| HelixError::ChartExit { t, source })?;
        Ok(gram_deviation(&g, z, n, w))
    }
}

/// Restores `g(ζ,N) = 1`, `g(N,N) = 0`, `W ⟂ {ζ, N}` and `g(W,W) = −1`,
/// leaving `ζ` untouched.
pub fn reproject(g: &Mat<f64>, z: &[f64], n: &[f64], w: &[f64]) -> [Vec<f64>; 2] {
    let ip = |a: &[f64], b: &[f64]| linalg::bilinear(g, a, b);
    let n = linalg::scale(n, &(1.0 / ip(z, n)));
    let n = linalg::axpy(&n, &(-0.5 * ip(&n, &n)), z);
    let w = linalg::axpy(w, &(-ip(w, &n)), z);
    let w = linalg::axpy(&w, &(-ip(&w, z)), &n);
    let q = -ip(&w, &w);
    let w = if q > 0.0 {
        linalg::scale(&w, &(1.0 / q.sqrt()))
    } else {
        w
    };
    [n, w]
}

/// Integrates the Frenet system from the start of the domain and records
/// the state at every grid value (ascending, inside the domain).
pub fn synthesize(
    spec: &HelixSpec,
    grid: &[f64],
    config: &SynthConfig,
) -> Result<HelixTrace, HelixError> {
    spec.validate()?;
    let (t0, t1) = spec.domain;
    let mut prev = t0;
    for &t in grid {
        if !(t >= prev && t <= t1 + 1e-12 * (t1 - t0)) {
            return Err(HelixError::BadGrid { t });
        }
        prev = t;
    }
    let integ = Integrator {
        metric: &spec.metric,
        h: spec.h,
        k1: spec.k1,
        k2: spec.k2,
    };
    let mut y: Vec<f64> = [&spec.initial_point, &spec.zeta, &spec.n, &spec.w]
        .iter()
        .flat_map(|v| v.iter().copied())
        .collect();
    let mut y_half = y.clone();
    let mut t = t0;
    let mut steps = 0usize;
    let mut rhs = |s: f64, v: &[f64]| integ.rhs(s, v);
    let mut samples = Vec::with_capacity(grid.len());
    for &target in grid {
        if target > t {
            let n = ode::substeps(target - t, spec.step);
            let dt = (target - t) / n as f64;
            for i in 0..n {
                let s = t + i as f64 * dt;
                y = ode::rk4_step(&mut rhs, s, &y, dt)?;
                y_half = ode::rk4_step(&mut rhs, s, &y_half, 0.5 * dt)?;
                y_half = ode::rk4_step(&mut rhs, s + 0.5 * dt, &y_half, 0.5 * dt)?;
                steps += 1;
                if let Some(m) = config.project_every {
                    if m > 0 && steps.is_multiple_of(m) {
                        integ.project(s + dt, &mut y)?;
                        integ.project(s + dt, &mut y_half)?;
                    }
                }
            }
            t = target;
        }
        let drift = integ.drift(t, &y)?;
        if drift > config.drift_limit {
            return Err(HelixError::Drift {
                t,
                value: drift,
                limit: config.drift_limit,
            });
        }
        let (x, z, n, w) = unpack(&y);
        samples.push(TraceSample {
            t,
            point: x.to_vec(),
            zeta: z.to_vec(),
            n: n.to_vec(),
            w: w.to_vec(),
            gram_drift: drift,
            error_estimate: linalg::norm(&linalg::sub(&y, &y_half)) / 15.0,
        });
    }
    let (lead, tail) = if grid.len() >= 2 {
        let d0 = grid[1] - grid[0];
        let d1 = grid[grid.len() - 1] - grid[grid.len() - 2];
        let start = [&spec.initial_point, &spec.zeta, &spec.n, &spec.w]
            .iter()
            .flat_map(|v| v.iter().copied())
            .collect::<Vec<_>>();
        let mut lead = margin(&integ, spec.step, config, t0, start, grid[0], -d0);
        lead.reverse();
        (lead, margin(&integ, spec.step, config, t, y, t, d1))
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(HelixTrace {
        metric: spec.metric.clone(),
        constants: spec.curvatures(),
        samples,
        lead,
        tail,
    })
}

/// States at `from + k·d` for `k = 1..=STENCIL_WIDTH/2`, integrated from
/// `(t, y)`. Stops quietly at the first failure.
fn margin(
    integ: &Integrator<'_>,
    step: f64,
    config: &SynthConfig,
    mut t: f64,
    mut y: Vec<f64>,
    from: f64,
    d: f64,
) -> Vec<TraceSample> {
    let mut out = Vec::new();
    if !(d.abs() > 0.0) {
        return out;
    }
    let mut rhs = |s: f64, v: &[f64]| integ.rhs(s, v);
    for k in 1..=STENCIL_WIDTH / 2 {
        let target = from + k as f64 * d;
        let n = ode::substeps(target - t, step);
        let Ok(next) = ode::integrate(&mut rhs, t, target, &y, n) else {
            break;
        };
        match integ.drift(target, &next) {
            Ok(drift) if drift <= config.drift_limit => {
                let (x, z, nn, w) = unpack(&next);
                out.push(TraceSample {
                    t: target,
                    point: x.to_vec(),
                    zeta: z.to_vec(),
                    n: nn.to_vec(),
                    w: w.to_vec(),
                    gram_drift: drift,
                    error_estimate: 0.0,
                });
            }
            _ => break,
        }
        t = target;
        y = next;
    }
    out
}

/// Grid with the given number of uniform samples over `spec.domain`.
pub fn trace_grid(spec: &HelixSpec, samples: usize) -> Vec<f64> {
    crate::nullframe::uniform_grid(spec.domain, samples)
}

impl HelixTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_gram_drift(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.gram_drift)
            .fold(0.0, f64::max)
    }

    pub fn max_error_estimate(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.error_estimate)
            .fold(0.0, f64::max)
    }

    /// Derivatives `0..=3` of `ζ` and `N` at sample `i` from a
    /// finite-difference stencil over neighbouring samples.
    fn derivatives(&self, i: usize) -> Result<[[Vec<f64>; 4]; 2], HelixError> {
        if self.samples.len() < MIN_STENCIL {
            return Err(HelixError::ShortTrace(self.samples.len()));
        }
        let all: Vec<&TraceSample> = self
            .lead
            .iter()
            .chain(&self.samples)
            .chain(&self.tail)
            .collect();
        let centre = i + self.lead.len();
        let idx = window(centre, all.len(), STENCIL_WIDTH);
        let nodes: Vec<f64> = idx.clone().map(|j| all[j].t).collect();
        let w = fornberg_weights(all[centre].t, &nodes, 3);
        let apply = |field: fn(&TraceSample) -> &Vec<f64>, m: usize| -> Vec<f64> {
            (0..3)
                .map(|c| {
                    idx.clone()
                        .zip(&w[m])
                        .map(|(j, wt)| wt * field(all[j])[c])
                        .sum()
                })
                .collect()
        };
        let s = &self.samples[i];
        let zeta = [
            s.zeta.clone(),
            apply(|s| &s.zeta, 1),
            apply(|s| &s.zeta, 2),
            apply(|s| &s.zeta, 3),
        ];
        let n = [
            s.n.clone(),
            apply(|s| &s.n, 1),
            apply(|s| &s.n, 2),
            apply(|s| &s.n, 3),
        ];
        Ok([zeta, n])
    }

    /// Position jets of order 4 and transversal jets of order 3 at sample `i`.
    pub fn jets(&self, i: usize) -> Result<(Vec<Jet>, Vec<Jet>), HelixError> {
        let [dz, dn] = self.derivatives(i)?;
        let s = &self.samples[i];
        let pos = (0..3)
            .map(|c| {
                Jet::from_coeffs(vec![
                    s.point[c],
                    dz[0][c],
                    dz[1][c] / 2.0,
                    dz[2][c] / 6.0,
                    dz[3][c] / 24.0,
                ])
            })
            .collect();
        let n = (0..3)
            .map(|c| Jet::from_coeffs(vec![dn[0][c], dn[1][c], dn[2][c] / 2.0, dn[3][c] / 6.0]))
            .collect();
        Ok((pos, n))
    }

    /// Frame field at sample `i` with the trace's own `N` as screen seed,
    /// which reproduces the integrated frame.
    pub fn framed_jets(&self, i: usize) -> Result<FramedJets<'_>, HelixError> {
        let (pos, n) = self.jets(i)?;
        let s = &self.samples[i];
        let raw = FramedJets::build(&self.metric, s.t, &pos, &n, 1.0)?;
        let sign = if linalg::dot(&linalg::values(&raw.w), &s.w) < 0.0 {
            -1.0
        } else {
            1.0
        };
        if sign > 0.0 {
            return Ok(raw);
        }
        Ok(FramedJets::build(&self.metric, s.t, &pos, &n, sign)?)
    }

    /// Curvatures re-extracted at every sample.
    pub fn curvature_samples(&self) -> Result<Vec<CurvatureSample>, HelixError> {
        (0..self.samples.len())
            .map(|i| Ok(self.framed_jets(i)?.curvatures()))
            .collect()
    }

    /// Identity report at every sample against the trace's constants.
    pub fn identity_reports(&self) -> Result<Vec<IdentityReport>, HelixError> {
        (0..self.samples.len())
            .map(|i| {
                Ok(metric_identity_suite(
                    &self.framed_jets(i)?,
                    &self.constants,
                )?)
            })
            .collect()
    }

    /// Writes `t, x1..x3, zeta1..3, n1..3, w1..3, gram_drift, cubic_residual`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), Box<dyn std::error::Error>> {
        let mut wr = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        for prefix in ["x", "zeta", "n", "w"] {
            header.extend((1..=3).map(|i| format!("{prefix}{i}")));
        }
        header.push("gram_drift".into());
        header.push("cubic_residual".into());
        wr.write_record(&header)?;
        for (i, s) in self.samples.iter().enumerate() {
            let cubic = cubic_identity_residual(&self.framed_jets(i)?, &self.constants)?;
            let mut row = vec![s.t];
            for v in [&s.point, &s.zeta, &s.n, &s.w] {
                row.extend_from_slice(v);
            }
            row.push(s.gram_drift);
            row.push(cubic);
            wr.write_record(row.iter().map(|v| v.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `‖∇ζ∇ζ∇ζζ − (h²+2k₁k₂)∇ζζ‖` in coordinate components.
pub fn cubic_identity_residual(
    fj: &FramedJets<'_>,
    k: &CurvatureSample,
) -> Result<f64, FrameError> {
    let third = fj.third_covariant()?;
    let a = linalg::values(&fj.accel);
    let c = k.cubic_constant();
    Ok(linalg::norm(
        &third
            .iter()
            .zip(&a)
            .map(|(x, y)| x - c * y)
            .collect::<Vec<_>>(),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub t: f64,
    pub cubic_residual: f64,
    /// `g(∇ζζ,∇ζζ)`, `g(∇ζN,∇ζN)`, `g(∇ζW,∇ζW)`, `g(∇ζζ,∇ζN)`.
    pub scalars: [f64; 4],
    /// `−k₁²`, `−k₂²`, `2k₁k₂`, `−h²−k₁k₂`.
    pub targets: [f64; 4],
    pub deviations: [f64; 4],
    /// `−g(∇ζζ,∇ζN) + ½ g(∇ζW,∇ζW)`, which should equal `h² + 2k₁k₂`.
    pub premultiplier: f64,
    pub premultiplier_deviation: f64,
}

impl IdentityReport {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.into_iter().fold(0.0, f64::max)
    }
}

/// The helix identities at one sample, with targets taken from `k`.
pub fn metric_identity_suite(
    fj: &FramedJets<'_>,
    k: &CurvatureSample,
) -> Result<IdentityReport, FrameError> {
    let scalars = fj.identity_scalars();
    let targets = [
        -k.k1 * k.k1,
        -k.k2 * k.k2,
        2.0 * k.k1 * k.k2,
        -k.h * k.h - k.k1 * k.k2,
    ];
    let deviations = std::array::from_fn(|i| (scalars[i] - targets[i]).abs());
    let premultiplier = -scalars[3] + 0.5 * scalars[2];
    Ok(IdentityReport {
        t: fj.t,
        cubic_residual: cubic_identity_residual(fj, k)?,
        scalars,
        targets,
        deviations,
        premultiplier,
        premultiplier_deviation: (premultiplier - k.cubic_constant()).abs(),
    })
}

/// Maximum deviation of each curvature from its first sample.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Constancy {
    pub h: f64,
    pub k1: f64,
    pub k2: f64,
}

impl Constancy {
    pub fn max(&self) -> f64 {
        self.h.max(self.k1).max(self.k2)
    }
}

pub fn constancy_report(samples: &[CurvatureSample]) -> Result<Constancy, HelixError> {
    if samples.len() < 2 {
        return Err(HelixError::TooFewSamples);
    }
    let first = samples[0];
    Ok(samples
        .iter()
        .fold(Constancy::default(), |acc, s| Constancy {
            h: acc.h.max((s.h - first.h).abs()),
            k1: acc.k1.max((s.k1 - first.k1).abs()),
            k2: acc.k2.max((s.k2 - first.k2).abs()),
        }))
}

/// Largest deviation of re-extracted curvatures from the prescribed constants.
pub fn round_trip_deviation(trace: &HelixTrace) -> Result<f64, HelixError> {
    let c = trace.constants;
    Ok(trace
        .curvature_samples()?
        .iter()
        .map(|s| {
            (s.h - c.h)
                .abs()
                .max((s.k1 - c.k1).abs())
                .max((s.k2 - c.k2).abs())
        })
        .fold(0.0, f64::max))
}

/// Closed-form position components of the helix when the chart metric is
/// constant. There `ζ‴ = K ζ′` with `K = h² + 2k₁k₂`, so `ζ` is a
/// combination of `1, cosh(st), sinh(st)` (`K = s² > 0`), `1, cos(st),
/// sin(st)` (`K = −s² < 0`) or a quadratic (`K = 0`). Returns `None` for a
/// non-constant metric.
pub fn flat_closed_form(spec: &HelixSpec) -> Option<Vec<Expr>> {
    if !spec.metric.is_constant() {
        return None;
    }
    let (h, k1, k2) = (spec.h, spec.k1, spec.k2);
    let t0 = spec.domain.0;
    let z0 = &spec.zeta;
    // ζ'(t0) = hζ + k₁W, ζ''(t0) = hζ' + k₁(k₂ζ + k₁N)
    let z1: Vec<f64> = (0..3).map(|c| h * z0[c] + k1 * spec.w[c]).collect();
    let z2: Vec<f64> = (0..3)
        .map(|c| h * z1[c] + k1 * (k2 * z0[c] + k1 * spec.n[c]))
        .collect();
    let kk = h * h + 2.0 * k1 * k2;
    let lit = |v: f64| format!("({v:e})");
    let tau = if t0 == 0.0 {
        "t".to_string()
    } else {
        format!("(t-{})", lit(t0))
    };
    let comps = (0..3).map(|c| {
        let x0 = spec.initial_point[c];
        if kk.abs() < 1e-12 {
            format!(
                "{} + {}*{tau} + {}*{tau}^2 + {}*{tau}^3",
                lit(x0),
                lit(z0[c]),
                lit(z1[c] / 2.0),
                lit(z2[c] / 6.0)
            )
        } else {
            let sq = kk.abs().sqrt();
            // ζ = a + b C(sτ) + c S(sτ)
            let (b, cc) = if kk > 0.0 {
                (z2[c] / kk, z1[c] / sq)
            } else {
                (-z2[c] / (-kk), z1[c] / sq)
            };
            let a = z0[c] - b;
            if kk > 0.0 {
                format!(
                    "{} + {}*{tau} + {}*sinh({}*{tau}) + {}*(cosh({}*{tau}) - 1)",
                    lit(x0),
                    lit(a),
                    lit(b / sq),
                    lit(sq),
                    lit(cc / sq),
                    lit(sq)
                )
            } else {
                format!(
                    "{} + {}*{tau} + {}*sin({}*{tau}) + {}*(1 - cos({}*{tau}))",
                    lit(x0),
                    lit(a),
                    lit(b / sq),
                    lit(sq),
                    lit(cc / sq),
                    lit(sq)
                )
            }
        }
    });
    comps.map(|src| parse_in(&src, &[Var::T]).ok()).collect()
}

/// Observed order of accuracy `log₂(e(h)/e(h/2))` of the integrated point at
/// the end of the domain against an exact solution.
pub fn convergence_exponent(
    spec: &HelixSpec,
    step: f64,
    exact_end: &[f64],
) -> Result<f64, HelixError> {
    let end = spec.domain.1;
    let err = |s: f64| -> Result<f64, HelixError> {
        let sp = HelixSpec {
            step: s,
            ..spec.clone()
        };
        let tr = synthesize(&sp, &[end], &SynthConfig::default())?;
        Ok(linalg::norm(&linalg::sub(&tr.samples[0].point, exact_end)))
    };
    Ok((err(step)? / err(step / 2.0)?).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn flat() -> MetricField {
        MetricField::diag(&[-1.0, -1.0, 1.0]).unwrap()
    }

    fn c1_spec(t1: f64) -> HelixSpec {
        HelixSpec {
            metric: flat(),
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

    #[test]
    fn c1_helix_reaches_closed_form() {
        let tr = synthesize(&c1_spec(1.0), &[1.0], &SynthConfig::default()).unwrap();
        let p = &tr.samples[0].point;
        assert_abs_diff_eq!(p[0], 1f64.cos(), epsilon = 1e-6);
        assert_abs_diff_eq!(p[1], 1f64.sin(), epsilon = 1e-6);
        assert_abs_diff_eq!(p[2], 1.0, epsilon = 1e-6);
        assert!(tr.samples[0].error_estimate < 1e-12);
    }

    #[test]
    fn zero_curvature_gives_straight_line() {
        let spec = HelixSpec {
            h: 0.0,
            k1: 0.0,
            k2: 0.0,
            initial_point: vec![0.0; 3],
            zeta: vec![1.0, 0.0, 1.0],
            n: vec![-0.5, 0.0, 0.5],
            w: vec![0.0, 1.0, 0.0],
            ..c1_spec(2.0)
        };
        let grid = trace_grid(&spec, 5);
        let tr = synthesize(&spec, &grid, &SynthConfig::default()).unwrap();
        for s in &tr.samples {
            assert_abs_diff_eq!(s.point[0], s.t, epsilon = 1e-12);
            assert_abs_diff_eq!(s.point[1], 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(s.point[2], s.t, epsilon = 1e-12);
            assert_eq!(s.zeta, spec.zeta);
            assert_eq!(s.w, spec.w);
        }
    }

    #[test]
    fn nonpositive_step_is_rejected() {
        for step in [0.0, -1e-3] {
            let spec = HelixSpec {
                step,
                ..c1_spec(1.0)
            };
            assert_eq!(
                synthesize(&spec, &[1.0], &SynthConfig::default()).unwrap_err(),
                HelixError::BadStep(step)
            );
        }
    }

    #[test]
    fn bad_initial_frame_is_rejected() {
        let spec = HelixSpec {
            w: vec![-2.0, 0.0, 0.0],
            ..c1_spec(1.0)
        };
        assert!(matches!(spec.validate(), Err(HelixError::InitialFrame(_))));
    }

    #[test]
    fn trace_reextraction_matches_constants() {
        let spec = c1_spec(2.0);
        let tr = synthesize(&spec, &trace_grid(&spec, 101), &SynthConfig::default()).unwrap();
        assert!(round_trip_deviation(&tr).unwrap() < 1e-8);
        for r in tr.identity_reports().unwrap() {
            assert!(r.cubic_residual < 1e-6, "{}", r.cubic_residual);
            assert!(r.max_deviation() < 1e-8);
            assert!(r.premultiplier_deviation < 1e-8);
        }
    }

    #[test]
    fn projection_keeps_frame_on_constraint_surface() {
        let spec = HelixSpec {
            step: 0.05,
            ..c1_spec(5.0)
        };
        let grid = trace_grid(&spec, 11);
        let raw = synthesize(&spec, &grid, &SynthConfig::default()).unwrap();
        let proj = synthesize(
            &spec,
            &grid,
            &SynthConfig {
                project_every: Some(1),
                ..SynthConfig::default()
            },
        )
        .unwrap();
        assert!(proj.max_gram_drift() <= raw.max_gram_drift());
        // ζ is never touched, so only the conditions involving N and W are restored
        let g = flat().metric_at(&[0.0; 3]).unwrap();
        for s in &proj.samples {
            let ip = |a: &[f64], b: &[f64]| linalg::bilinear(&g, a, b);
            assert!((ip(&s.zeta, &s.n) - 1.0).abs() < 1e-14);
            assert!(ip(&s.n, &s.w).abs() < 1e-14);
            assert!(ip(&s.zeta, &s.w).abs() < 1e-14);
            assert!((ip(&s.w, &s.w) + 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn drift_limit_aborts_with_time() {
        let spec = HelixSpec {
            step: 0.5,
            ..c1_spec(5.0)
        };
        let cfg = SynthConfig {
            drift_limit: 1e-12,
            ..SynthConfig::default()
        };
        assert!(matches!(
            synthesize(&spec, &trace_grid(&spec, 11), &cfg),
            Err(HelixError::Drift { .. })
        ));
    }

    #[test]
    fn closed_form_matches_integration() {
        for (h, k1, k2) in [
            (0.3, 0.8, 0.4),
            (0.0, 1.0, -0.5),
            (0.5, 1.0, -0.125),
            (-0.2, 1.5, -0.6),
        ] {
            let [zeta, n, w] = flat_frame(0.7, 1.0);
            let spec = HelixSpec {
                metric: flat(),
                h,
                k1,
                k2,
                initial_point: vec![0.5, -1.0, 2.0],
                zeta,
                n,
                w,
                domain: (0.5, 2.0),
                step: 1e-3,
            };
            let comps = flat_closed_form(&spec).unwrap();
            let tr = synthesize(&spec, &[1.0, 2.0], &SynthConfig::default()).unwrap();
            for s in &tr.samples {
                let env = crate::exprparse::Env::with_t(s.t);
                for c in 0..3 {
                    assert_abs_diff_eq!(comps[c].eval(&env).unwrap(), s.point[c], epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn rk4_order_on_c1() {
        let spec = c1_spec(1.0);
        let p = convergence_exponent(&spec, 0.1, &[1f64.cos(), 1f64.sin(), 1.0]).unwrap();
        assert!(p >= 3.7, "{p}");
    }

    #[test]
    fn constancy_needs_two_samples() {
        let s = CurvatureSample::new(0.0, 0.0, 1.0, 0.0);
        assert_eq!(constancy_report(&[s]), Err(HelixError::TooFewSamples));
        let t = CurvatureSample::new(1.0, 0.5, 4.0, 0.0);
        let c = constancy_report(&[s, t]).unwrap();
        assert_eq!((c.h, c.k1, c.k2), (0.5, 3.0, 0.0));
    }

    #[test]
    fn flat_frame_is_null_frame() {
        let g = flat().metric_at(&[0.0; 3]).unwrap();
        for (th, l) in [(0.3, 1.0), (2.0, 0.5), (-1.0, 2.0)] {
            let [z, n, w] = flat_frame(th, l);
            assert!(gram_deviation(&g, &z, &n, &w) < 1e-15);
        }
    }

    #[test]
    fn csv_has_contract_columns() {
        let spec = c1_spec(1.0);
        let tr = synthesize(&spec, &trace_grid(&spec, 9), &SynthConfig::default()).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,x1,x2,x3,zeta1,zeta2,zeta3,n1,n2,n3,w1,w2,w3,gram_drift,cubic_residual"
        );
        assert_eq!(lines.count(), 9);
    }
}
