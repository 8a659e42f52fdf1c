//! Null Frenet frames `{ζ, N, W}` along null curves in a 3D chart of index 2
//! and the curvature functions `(h, k₁, k₂)` of
//!
//! ```text
//! ∇ζ ζ =  h ζ + k₁ W
//! ∇ζ N = −h N + k₂ W
//! ∇ζ W = k₂ ζ + k₁ N          g(W, W) = −1
//! ```
//!
//! The screen is fixed by a seed vector `V`: `Ñ = V / g(ζ, V)`,
//! `N = Ñ − ½ g(Ñ, Ñ) ζ`, and `W` spans the g-orthogonal complement of
//! `{ζ, N}`. `h` and `k₂` depend on that choice, `k₁²` does not.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::exprparse::{eval_jet, Env, EvalError, Expr, Jet, Scalar, MAX_ORDER};
use crate::linalg::{self, Mat};
use crate::ode;
use crate::semimetric::{AlongCurve, CovariantError, MetricError, MetricField};

/// Gram tolerance for constructed frames.
pub const FRAME_TOL: f64 = 1e-9;
/// Below this `|g(ζ, V)|` a seed is unusable.
pub const SEED_TOL: f64 = 1e-8;
/// A policy seed `e` is used only where `|g(ζ,e)| ≥ SEED_CONDITION·|ζ|`.
/// The transversal grows like `|ζ|/g(ζ,e)²`, so weaker pairings give frames
/// whose Gram conditions cannot be held to [`FRAME_TOL`].
pub const SEED_CONDITION: f64 = 0.1;
/// Below this `|k₁|` a sample is flagged geodesic-type.
pub const GEODESIC_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("empty domain")]
    EmptyDomain,
    #[error("t = {t} lies outside the domain [{t0}, {t1}]")]
    OutOfDomain { t: f64, t0: f64, t1: f64 },
    #[error("curve must live in a 3-dimensional chart, metric has dimension {0}")]
    Dimension(usize),
    #[error("curve needs 3 components, got {0}")]
    ComponentCount(usize),
    #[error("tangent-mode curve needs an initial point with 3 coordinates")]
    MissingInitial,
    #[error("quadrature step must be positive, got {0}")]
    BadStep(f64),
    #[error("curve is not null at t = {t}: |g(ζ,ζ)| = {residual:e}")]
    NotNull { t: f64, residual: f64 },
    #[error("tangent vanishes at t = {t}")]
    ZeroTangent { t: f64 },
    #[error("metric has index {index} at t = {t}, expected 2")]
    IndexMismatch { t: f64, index: usize },
    #[error("no usable screen seed at t = {t}")]
    NoUsableSeed { t: f64 },
    #[error("screen complement is not timelike at t = {t} (g(W,W) = {value:e})")]
    NotTimelike { t: f64, value: f64 },
    #[error("frame violates the Gram conditions at t = {t} (deviation {value:e})")]
    GramViolation { t: f64, value: f64 },
    #[error("frame discontinuity at t = {t} that a sign flip cannot repair")]
    Discontinuity { t: f64 },
    #[error("bad seed list `{0}`: expected comma-separated e1, e2, e3")]
    BadSeed(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Covariant(#[from] CovariantError),
}

/// Ordered list of coordinate axes tried as screen seeds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScreenPolicy {
    /// Zero-based axis indices; `[2, 0, 1]` is `e3,e1,e2`.
    pub seeds: Vec<usize>,
}

impl Default for ScreenPolicy {
    fn default() -> Self {
        ScreenPolicy {
            seeds: vec![2, 0, 1],
        }
    }
}

impl ScreenPolicy {
    pub fn seed_vector(axis: usize, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        v
    }
}

impl FromStr for ScreenPolicy {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FrameError::BadSeed(s.to_string());
        let mut seeds = Vec::new();
        for part in s.split(',') {
            let axis = match part.trim() {
                "e1" => 0,
                "e2" => 1,
                "e3" => 2,
                _ => return Err(bad()),
            };
            if seeds.contains(&axis) {
                return Err(bad());
            }
            seeds.push(axis);
        }
        Ok(ScreenPolicy { seeds })
    }
}

impl fmt::Display for ScreenPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.seeds.iter().map(|a| format!("e{}", a + 1)).collect();
        write!(f, "{}", names.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveMode {
    /// Components give `γ(t)`.
    Position,
    /// Components give `ζ(t)`; positions come from RK4 quadrature.
    Tangent,
}

/// A parametrized curve in a 3D chart, expected to be null.
#[derive(Clone, Debug)]
pub struct NullCurve {
    metric: MetricField,
    mode: CurveMode,
    components: Vec<Expr>,
    initial: Vec<f64>,
    domain: (f64, f64),
    step: f64,
}

/// Frame vectors at one sample. `seed` and `orientation` record how the
/// frame was built so the same frame field can be regenerated as jets.
#[derive(Clone, Debug, PartialEq)]
pub struct NullFrame {
    pub t: f64,
    pub point: Vec<f64>,
    pub zeta: Vec<f64>,
    pub n: Vec<f64>,
    pub w: Vec<f64>,
    pub seed: Vec<f64>,
    /// `±1` applied to the raw screen vector.
    pub orientation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureSample {
    pub t: f64,
    pub h: f64,
    pub k1: f64,
    pub k2: f64,
    /// `|k₁|` below [`GEODESIC_TOL`].
    pub geodesic: bool,
}

impl CurvatureSample {
    pub fn new(t: f64, h: f64, k1: f64, k2: f64) -> Self {
        CurvatureSample {
            t,
            h,
            k1,
            k2,
            geodesic: k1.abs() < GEODESIC_TOL,
        }
    }

    /// `h² + 2k₁k₂`.
    pub fn cubic_constant(&self) -> f64 {
        self.h * self.h + 2.0 * self.k1 * self.k2
    }
}

/// Coordinate components of the three Frenet residuals.
#[derive(Clone, Debug, PartialEq)]
pub struct FrenetResiduals {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub r3: Vec<f64>,
}

impl FrenetResiduals {
    /// Euclidean norms of `r₁, r₂, r₃`.
    pub fn norms(&self) -> [f64; 3] {
        [
            linalg::norm(&self.r1),
            linalg::norm(&self.r2),
            linalg::norm(&self.r3),
        ]
    }

    pub fn max_norm(&self) -> f64 {
        self.norms().into_iter().fold(0.0, f64::max)
    }
}

/// Largest deviation among the six Gram conditions of a null frame.
pub fn gram_deviation(g: &Mat<f64>, zeta: &[f64], n: &[f64], w: &[f64]) -> f64 {
    let ip = |a: &[f64], b: &[f64]| linalg::bilinear(g, a, b);
    [
        ip(zeta, zeta).abs(),
        ip(n, n).abs(),
        (ip(zeta, n) - 1.0).abs(),
        ip(n, w).abs(),
        ip(zeta, w).abs(),
        (ip(w, w) + 1.0).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// The null transversal `N` built from seed `V`, or `None` when
/// `|g(ζ, V)| ≤ tol`.
pub fn transversal_from_seed<S: Scalar>(
    g: &Mat<S>,
    zeta: &[S],
    seed: &[S],
    tol: f64,
) -> Option<Vec<S>> {
    let c = linalg::bilinear(g, zeta, seed);
    if c.value().abs() <= tol {
        return None;
    }
    let nt = linalg::scale(seed, &c.recip());
    let half = linalg::bilinear(g, &nt, &nt).scale(-0.5);
    Some(linalg::axpy(&nt, &half, zeta))
}

/// Unit timelike `W` orthogonal to `ζ` and `N`, before orientation.
/// Returns `Err(g(W,W))` when the complement is not timelike.
pub fn screen_vector<S: Scalar>(g: &Mat<S>, zeta: &[S], n: &[S]) -> Result<Vec<S>, f64> {
    let w = linalg::cross3(&linalg::mat_vec(g, zeta), &linalg::mat_vec(g, n));
    let q = linalg::bilinear(g, &w, &w);
    if !(q.value() < 0.0) {
        return Err(q.value());
    }
    let inv = (-q).sqrt().recip();
    Ok(linalg::scale(&w, &inv))
}

/// A frame field around one parameter value, held as Taylor jets, together
/// with the covariant derivatives the Frenet equations need.
pub struct FramedJets<'m> {
    pub t: f64,
    along: AlongCurve<'m>,
    pub zeta: Vec<Jet>,
    pub n: Vec<Jet>,
    pub w: Vec<Jet>,
    /// `∇ζζ`, `∇ζN`, `∇ζW`.
    pub accel: Vec<Jet>,
    pub dn: Vec<Jet>,
    pub dw: Vec<Jet>,
}

impl<'m> FramedJets<'m> {
    /// `position` has order `K ≥ 2`; `seed` is a vector field along the curve
    /// (constant jets for a fixed axis).
    pub fn build(
        metric: &'m MetricField,
        t: f64,
        position: &[Jet],
        seed: &[Jet],
        orientation: f64,
    ) -> Result<Self, FrameError> {
        let along = AlongCurve::new(metric, position)?;
        if along.order() < 2 {
            return Err(CovariantError::InsufficientOrder {
                have: along.order(),
                need: 2,
            }
            .into());
        }
        let zeta = along.velocity().to_vec();
        let g = along.metric_jets().clone();
        let n = transversal_from_seed(&g, &zeta, seed, SEED_TOL)
            .ok_or(FrameError::NoUsableSeed { t })?;
        let w =
            screen_vector(&g, &zeta, &n).map_err(|value| FrameError::NotTimelike { t, value })?;
        let w = linalg::scale(&w, &Jet::constant(orientation));
        let accel = along.nabla(&zeta)?;
        let dn = along.nabla(&n)?;
        let dw = along.nabla(&w)?;
        Ok(FramedJets {
            t,
            along,
            zeta,
            n,
            w,
            accel,
            dn,
            dw,
        })
    }

    pub fn along(&self) -> &AlongCurve<'m> {
        &self.along
    }

    pub fn metric_value(&self) -> Mat<f64> {
        linalg::mat_values(self.along.metric_jets())
    }

    fn ip(&self, a: &[Jet], b: &[Jet]) -> f64 {
        self.along
            .inner_value(&linalg::values(a), &linalg::values(b))
    }

    /// `(h, k₁, k₂)` from `h = g(∇ζζ, N)`, `k₁ = −g(∇ζζ, W)`,
    /// `k₂ = −g(∇ζN, W)`.
    pub fn curvatures(&self) -> CurvatureSample {
        let h = self.ip(&self.accel, &self.n);
        let k1 = -self.ip(&self.accel, &self.w);
        let k2 = -self.ip(&self.dn, &self.w);
        CurvatureSample::new(self.t, h, k1, k2)
    }

    pub fn gram_deviation(&self) -> f64 {
        gram_deviation(
            &self.metric_value(),
            &linalg::values(&self.zeta),
            &linalg::values(&self.n),
            &linalg::values(&self.w),
        )
    }

    /// Frenet residuals with the algebraic terms taken from `frame`.
    pub fn residuals_with(
        &self,
        zeta: &[f64],
        n: &[f64],
        w: &[f64],
        k: &CurvatureSample,
    ) -> FrenetResiduals {
        let a = linalg::values(&self.accel);
        let dn = linalg::values(&self.dn);
        let dw = linalg::values(&self.dw);
        let r1 = (0..3).map(|i| a[i] - k.h * zeta[i] - k.k1 * w[i]).collect();
        let r2 = (0..3).map(|i| dn[i] + k.h * n[i] - k.k2 * w[i]).collect();
        let r3 = (0..3)
            .map(|i| dw[i] - k.k2 * zeta[i] - k.k1 * n[i])
            .collect();
        FrenetResiduals { r1, r2, r3 }
    }

    pub fn residuals(&self, k: &CurvatureSample) -> FrenetResiduals {
        self.residuals_with(
            &linalg::values(&self.zeta),
            &linalg::values(&self.n),
            &linalg::values(&self.w),
            k,
        )
    }

    /// `g(∇ζζ,∇ζζ)`, `g(∇ζN,∇ζN)`, `g(∇ζW,∇ζW)`, `g(∇ζζ,∇ζN)`.
    pub fn identity_scalars(&self) -> [f64; 4] {
        [
            self.ip(&self.accel, &self.accel),
            self.ip(&self.dn, &self.dn),
            self.ip(&self.dw, &self.dw),
            self.ip(&self.accel, &self.dn),
        ]
    }

    /// Coordinate components of `∇ζ∇ζ∇ζζ`; needs position jets of order 4.
    pub fn third_covariant(&self) -> Result<Vec<f64>, FrameError> {
        let a2 = self.along.nabla(&self.accel)?;
        let a3 = self.along.nabla(&a2)?;
        Ok(linalg::values(&a3))
    }
}

impl NullCurve {
    pub fn position(
        metric: MetricField,
        components: Vec<Expr>,
        domain: (f64, f64),
    ) -> Result<NullCurve, FrameError> {
        Self::new(
            metric,
            CurveMode::Position,
            components,
            Vec::new(),
            domain,
            1e-3,
        )
    }

    pub fn tangent(
        metric: MetricField,
        components: Vec<Expr>,
        initial: Vec<f64>,
        domain: (f64, f64),
        step: f64,
    ) -> Result<NullCurve, FrameError> {
        if initial.len() != 3 {
            return Err(FrameError::MissingInitial);
        }
        Self::new(
            metric,
            CurveMode::Tangent,
            components,
            initial,
            domain,
            step,
        )
    }

    fn new(
        metric: MetricField,
        mode: CurveMode,
        components: Vec<Expr>,
        initial: Vec<f64>,
        domain: (f64, f64),
        step: f64,
    ) -> Result<NullCurve, FrameError> {
        if metric.dim() != 3 {
            return Err(FrameError::Dimension(metric.dim()));
        }
        if components.len() != 3 {
            return Err(FrameError::ComponentCount(components.len()));
        }
        if !(domain.0 < domain.1) {
            return Err(FrameError::EmptyDomain);
        }
        if !(step > 0.0) {
            return Err(FrameError::BadStep(step));
        }
        Ok(NullCurve {
            metric,
            mode,
            components,
            initial,
            domain,
            step,
        })
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    /// Quadrature step used in tangent mode.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn mode(&self) -> CurveMode {
        self.mode
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// `n` uniform samples of the domain, endpoints included.
    pub fn uniform_grid(&self, n: usize) -> Vec<f64> {
        uniform_grid(self.domain, n)
    }

    fn check_t(&self, t: f64) -> Result<(), FrameError> {
        let (t0, t1) = self.domain;
        let slack = 1e-12 * (t1 - t0).max(1.0);
        if !(t >= t0 - slack && t <= t1 + slack) {
            return Err(FrameError::OutOfDomain { t, t0, t1 });
        }
        Ok(())
    }

    fn component_jets(&self, t: f64, order: usize) -> Result<Vec<Jet>, EvalError> {
        let env = Env::with_t(Jet::variable(t, order));
        self.components
            .iter()
            .map(|c| eval_jet(c, &env, order))
            .collect()
    }

    fn component_values(&self, t: f64) -> Result<Vec<f64>, EvalError> {
        let env = Env::with_t(t);
        self.components.iter().map(|c| c.eval(&env)).collect()
    }

    /// Positions at every grid value. Tangent-mode curves are integrated
    /// from the domain start, walking the grid in ascending order.
    pub fn points(&self, grid: &[f64]) -> Result<Vec<Vec<f64>>, FrameError> {
        for &t in grid {
            self.check_t(t)?;
        }
        match self.mode {
            CurveMode::Position => grid
                .iter()
                .map(|&t| Ok(self.component_values(t)?))
                .collect(),
            CurveMode::Tangent => {
                let mut order: Vec<usize> = (0..grid.len()).collect();
                order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
                let mut out = vec![Vec::new(); grid.len()];
                let mut t = self.domain.0;
                let mut x = self.initial.clone();
                let mut rhs = |s: f64, _y: &[f64]| self.component_values(s);
                for i in order {
                    let target = grid[i];
                    if target != t {
                        let n = ode::substeps(target - t, self.step);
                        x = ode::integrate(&mut rhs, t, target, &x, n)?;
                        t = target;
                    }
                    out[i] = x.clone();
                }
                Ok(out)
            }
        }
    }

    pub fn point_at(&self, t: f64) -> Result<Vec<f64>, FrameError> {
        Ok(self.points(&[t])?.remove(0))
    }

    /// Position jets of the given order at `t`, with `point` the position
    /// (needed in tangent mode, where it comes from quadrature).
    pub fn jets_at(&self, t: f64, point: &[f64], order: usize) -> Result<Vec<Jet>, FrameError> {
        if order > MAX_ORDER {
            return Err(EvalError::OrderTooHigh(order).into());
        }
        match self.mode {
            CurveMode::Position => Ok(self.component_jets(t, order)?),
            CurveMode::Tangent => {
                let order = order.max(1);
                let z = self.component_jets(t, order - 1)?;
                Ok(z.iter()
                    .zip(point)
                    .map(|(zj, &x)| zj.integrate(x))
                    .collect())
            }
        }
    }

    /// `ζ(t)`.
    pub fn tangent_at(&self, t: f64) -> Result<Vec<f64>, FrameError> {
        self.check_t(t)?;
        match self.mode {
            CurveMode::Tangent => Ok(self.component_values(t)?),
            CurveMode::Position => Ok(self
                .component_jets(t, 1)?
                .iter()
                .map(|j| j.coeff(1))
                .collect()),
        }
    }

    /// `|g(ζ, ζ)|` at `t`.
    pub fn check_null(&self, t: f64) -> Result<f64, FrameError> {
        let x = self.point_at(t)?;
        let z = self.tangent_at(t)?;
        Ok(self.metric.inner(&x, &z, &z)?.abs())
    }

    fn validate_sample(&self, t: f64, x: &[f64]) -> Result<(), FrameError> {
        let z = self.tangent_at(t)?;
        if linalg::norm(&z) == 0.0 {
            return Err(FrameError::ZeroTangent { t });
        }
        let residual = self.metric.inner(x, &z, &z)?.abs();
        if residual > FRAME_TOL * linalg::norm(&z).powi(2).max(1.0) {
            return Err(FrameError::NotNull { t, residual });
        }
        let index = self.metric.index_at(x)?;
        if index != 2 {
            return Err(FrameError::IndexMismatch { t, index });
        }
        Ok(())
    }

    /// Frame jets at `t` from a fixed seed, position jets of `order`.
    pub fn framed_jets(
        &self,
        t: f64,
        point: &[f64],
        seed: &[f64],
        orientation: f64,
        order: usize,
    ) -> Result<FramedJets<'_>, FrameError> {
        let pos = self.jets_at(t, point, order)?;
        let seed: Vec<Jet> = seed.iter().map(|&v| Jet::constant(v)).collect();
        FramedJets::build(&self.metric, t, &pos, &seed, orientation)
    }

    fn frame_from(
        &self,
        fj: &FramedJets<'_>,
        point: &[f64],
        seed: &[f64],
        orientation: f64,
    ) -> NullFrame {
        NullFrame {
            t: fj.t,
            point: point.to_vec(),
            zeta: linalg::values(&fj.zeta),
            n: linalg::values(&fj.n),
            w: linalg::values(&fj.w),
            seed: seed.to_vec(),
            orientation,
        }
    }

    fn seed_usable(&self, t: f64, x: &[f64], axis: usize) -> Result<bool, FrameError> {
        let z = self.tangent_at(t)?;
        let g = self.metric.metric_at(x)?;
        let v = ScreenPolicy::seed_vector(axis, 3);
        Ok(linalg::bilinear(&g, &z, &v).abs() >= SEED_CONDITION * linalg::norm(&z))
    }

    /// Unoriented frame and its `k₁` at one sample.
    fn raw_frame(&self, t: f64, x: &[f64], axis: usize) -> Result<(NullFrame, f64), FrameError> {
        let seed = ScreenPolicy::seed_vector(axis, 3);
        let fj = self.framed_jets(t, x, &seed, 1.0, 2)?;
        let dev = fj.gram_deviation();
        if dev > FRAME_TOL {
            return Err(FrameError::GramViolation { t, value: dev });
        }
        let k1 = fj.curvatures().k1;
        Ok((self.frame_from(&fj, x, &seed, 1.0), k1))
    }

    /// Frame at a single parameter value, oriented so that `k₁ ≥ 0` when
    /// `|k₁|` exceeds [`GEODESIC_TOL`].
    pub fn build_frame(&self, t: f64, policy: &ScreenPolicy) -> Result<NullFrame, FrameError> {
        Ok(self.frame_field(&[t], policy)?.remove(0))
    }

    /// Frames on a grid. The first seed usable at every sample is used
    /// throughout so the field is smooth; otherwise each sample falls back to
    /// its own first usable seed and signs are matched across seed changes.
    pub fn frame_field(
        &self,
        grid: &[f64],
        policy: &ScreenPolicy,
    ) -> Result<Vec<NullFrame>, FrameError> {
        if grid.is_empty() {
            return Ok(Vec::new());
        }
        let points = self.points(grid)?;
        for (&t, x) in grid.iter().zip(&points) {
            self.validate_sample(t, x)?;
        }
        let mut global = None;
        for &axis in &policy.seeds {
            let mut ok = true;
            for (&t, x) in grid.iter().zip(&points) {
                if !self.seed_usable(t, x, axis)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                global = Some(axis);
                break;
            }
        }
        let mut frames = Vec::with_capacity(grid.len());
        let mut k1s = Vec::with_capacity(grid.len());
        for (&t, x) in grid.iter().zip(&points) {
            let axis = match global {
                Some(a) => a,
                None => {
                    let mut found = None;
                    for &a in &policy.seeds {
                        if self.seed_usable(t, x, a)? {
                            found = Some(a);
                            break;
                        }
                    }
                    found.ok_or(FrameError::NoUsableSeed { t })?
                }
            };
            let (f, k1) = self.raw_frame(t, x, axis)?;
            frames.push(f);
            k1s.push(k1);
        }
        // continuity across seed switches
        for i in 1..frames.len() {
            if frames[i].seed == frames[i - 1].seed {
                continue;
            }
            let (prev, cur) = (&frames[i - 1].w, &frames[i].w);
            if linalg::dot(prev, cur) < 0.0 {
                flip(&mut frames[i], &mut k1s[i]);
            }
            let (prev, cur) = (&frames[i - 1].w, &frames[i].w);
            let jump = linalg::norm(&linalg::sub(cur, prev));
            if jump > 0.5 * (linalg::norm(cur) + linalg::norm(prev)) {
                return Err(FrameError::Discontinuity { t: frames[i].t });
            }
        }
        if let Some(i) = k1s.iter().position(|k| k.abs() > GEODESIC_TOL) {
            if k1s[i] < 0.0 {
                for (f, k) in frames.iter_mut().zip(k1s.iter_mut()) {
                    flip(f, k);
                }
            }
        }
        Ok(frames)
    }

    fn regenerate(&self, frame: &NullFrame, order: usize) -> Result<FramedJets<'_>, FrameError> {
        self.check_t(frame.t)?;
        self.framed_jets(frame.t, &frame.point, &frame.seed, frame.orientation, order)
    }

    /// Curvatures of the frame field that `frame` belongs to.
    pub fn curvatures_at(&self, frame: &NullFrame) -> Result<CurvatureSample, FrameError> {
        let g = self.metric.metric_at(&frame.point)?;
        let dev = gram_deviation(&g, &frame.zeta, &frame.n, &frame.w);
        if dev > FRAME_TOL {
            return Err(FrameError::GramViolation {
                t: frame.t,
                value: dev,
            });
        }
        Ok(self.regenerate(frame, 2)?.curvatures())
    }

    /// Frenet residuals. Derivative terms come from the frame field
    /// regenerated from the frame's seed and orientation, algebraic terms
    /// from the supplied vectors, so a corrupted frame shows up directly.
    pub fn frenet_residuals(
        &self,
        frame: &NullFrame,
        k: &CurvatureSample,
    ) -> Result<FrenetResiduals, FrameError> {
        let fj = self.regenerate(frame, 2)?;
        Ok(fj.residuals_with(&frame.zeta, &frame.n, &frame.w, k))
    }

    /// Frame jets of order 4 in position, enough for `∇ζ∇ζ∇ζζ`.
    pub fn local_jets(&self, frame: &NullFrame) -> Result<FramedJets<'_>, FrameError> {
        self.regenerate(frame, 4)
    }
}

fn flip(frame: &mut NullFrame, k1: &mut f64) {
    frame.orientation = -frame.orientation;
    for c in &mut frame.w {
        *c = -*c;
    }
    *k1 = -*k1;
}

/// `n` uniform samples of `[t0, t1]`, endpoints included.
pub fn uniform_grid(domain: (f64, f64), n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![domain.0],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    domain.1
                } else {
                    domain.0 + (domain.1 - domain.0) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprparse::parse;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn flat() -> MetricField {
        MetricField::diag(&[-1.0, -1.0, 1.0]).unwrap()
    }

    fn curve(src: [&str; 3], domain: (f64, f64)) -> NullCurve {
        NullCurve::position(
            flat(),
            src.iter().map(|s| parse(s).unwrap()).collect(),
            domain,
        )
        .unwrap()
    }

    fn c1() -> NullCurve {
        curve(["cos(t)", "sin(t)", "t"], (0.0, 2.0 * PI))
    }

    fn close(a: &[f64], b: &[f64], eps: f64) {
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(*x, *y, epsilon = eps);
        }
    }

    #[test]
    fn null_check_examples() {
        assert!(c1().check_null(1.3).unwrap() <= 1e-12);
        assert_eq!(
            curve(["t", "0", "t"], (0.0, 1.0)).check_null(0.5).unwrap(),
            0.0
        );
        assert_eq!(
            curve(["t", "0", "2*t"], (0.0, 1.0))
                .check_null(0.5)
                .unwrap(),
            3.0
        );
    }

    #[test]
    fn c1_frame_matches_closed_form() {
        let p = ScreenPolicy::default();
        for t in [0.0, 0.9, 3.3, 6.0] {
            let f = c1().build_frame(t, &p).unwrap();
            close(&f.n, &[t.sin() / 2.0, -t.cos() / 2.0, 0.5], 1e-14);
            close(&f.w, &[-t.cos(), -t.sin(), 0.0], 1e-14);
            let k = c1().curvatures_at(&f).unwrap();
            assert_abs_diff_eq!(k.h, 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(k.k1, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(k.k2, -0.5, epsilon = 1e-14);
            assert!(c1().frenet_residuals(&f, &k).unwrap().max_norm() <= 1e-12);
        }
    }

    #[test]
    fn straight_null_line() {
        let c = curve(["t", "0", "t"], (0.0, 1.0));
        let f = c.build_frame(0.3, &ScreenPolicy::default()).unwrap();
        close(&f.zeta, &[1.0, 0.0, 1.0], 0.0);
        close(&f.n, &[-0.5, 0.0, 0.5], 1e-15);
        assert_abs_diff_eq!(f.w[1].abs(), 1.0, epsilon = 1e-15);
        let k = c.curvatures_at(&f).unwrap();
        assert_eq!((k.h, k.k1, k.k2), (0.0, 0.0, 0.0));
        assert!(k.geodesic);
        assert_eq!(c.frenet_residuals(&f, &k).unwrap().max_norm(), 0.0);
    }

    #[test]
    fn spacelike_curve_is_rejected() {
        let c = curve(["0", "0", "t"], (0.0, 1.0));
        assert!(matches!(
            c.build_frame(0.5, &ScreenPolicy::default()),
            Err(FrameError::NotNull { .. })
        ));
    }

    #[test]
    fn field_edge_cases() {
        let p = ScreenPolicy::default();
        assert!(c1().frame_field(&[], &p).unwrap().is_empty());
        let one = c1().frame_field(&[1.0], &p).unwrap();
        assert_eq!(one, vec![c1().build_frame(1.0, &p).unwrap()]);
        let grid = c1().uniform_grid(100);
        let frames = c1().frame_field(&grid, &p).unwrap();
        let g = flat().metric_at(&[0.0; 3]).unwrap();
        for w in frames.windows(2) {
            assert!(linalg::norm(&linalg::sub(&w[0].w, &w[1].w)) < 0.1);
        }
        for f in &frames {
            assert!(gram_deviation(&g, &f.zeta, &f.n, &f.w) <= 1e-12);
        }
    }

    #[test]
    fn corrupted_screen_vector_shows_in_first_residual() {
        let p = ScreenPolicy::default();
        let mut f = c1().build_frame(0.7, &p).unwrap();
        let k = c1().curvatures_at(&f).unwrap();
        f.w.iter_mut().for_each(|c| *c *= 2.0);
        let r = c1().frenet_residuals(&f, &k).unwrap();
        assert_abs_diff_eq!(r.norms()[0], 1.0, epsilon = 1e-12);
        assert!(c1().curvatures_at(&f).is_err());
    }

    #[test]
    fn tangent_mode_curvature_grows_linearly() {
        let comps = ["cos(t^2)", "sin(t^2)", "1"]
            .map(|s| parse(s).unwrap())
            .to_vec();
        let c = NullCurve::tangent(flat(), comps, vec![1.0, 0.0, 0.0], (0.5, 2.0), 1e-3).unwrap();
        let grid = c.uniform_grid(7);
        let frames = c.frame_field(&grid, &ScreenPolicy::default()).unwrap();
        for f in &frames {
            let k = c.curvatures_at(f).unwrap();
            assert_abs_diff_eq!(k.k1, 2.0 * f.t, epsilon = 1e-12);
        }
    }

    #[test]
    fn seed_order_parses_and_prints() {
        let p: ScreenPolicy = "e1, e3,e2".parse().unwrap();
        assert_eq!(p.seeds, vec![0, 2, 1]);
        assert_eq!(p.to_string(), "e1,e3,e2");
        assert!("e1,e1".parse::<ScreenPolicy>().is_err());
        assert!("e4".parse::<ScreenPolicy>().is_err());
    }

    #[test]
    fn other_seed_changes_h_and_k2_but_not_k1_squared() {
        let p: ScreenPolicy = "e1,e3,e2".parse().unwrap();
        let f = c1().build_frame(0.4, &p).unwrap();
        let k = c1().curvatures_at(&f).unwrap();
        assert_abs_diff_eq!(k.k1 * k.k1, 1.0, epsilon = 1e-12);
        assert!(c1().frenet_residuals(&f, &k).unwrap().max_norm() <= 1e-12);
    }

    #[test]
    fn riemannian_chart_is_rejected() {
        let m = MetricField::diag(&[-1.0, 1.0, 1.0]).unwrap();
        let c = NullCurve::position(
            m,
            ["t", "t", "0"].map(|s| parse(s).unwrap()).to_vec(),
            (0.0, 1.0),
        )
        .unwrap();
        assert!(matches!(
            c.build_frame(0.2, &ScreenPolicy::default()),
            Err(FrameError::IndexMismatch { index: 1, .. })
        ));
    }
}
