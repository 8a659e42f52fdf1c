//! Immersed submanifolds `f: M → M̃` of a semi-Riemannian chart.
//!
//! Gauss and Weingarten formulas
//!
//! ```text
//! ∇̃_X Y = ∇_X Y + B(X, Y)        ∇̃_X N = −Aᴺ X + ∇⊥_X N
//! g(Aᴺ X, Y) = g̃(B(X, Y), N)
//! ```
//!
//! All geometry at a point is computed by [`Geometry`], generic over
//! [`Scalar`]. Derivatives of `B`, `H` and `Aᴺ` along a direction `Z` are
//! obtained by evaluating the same code at `u + sZ` with jets in `s`.

use thiserror::Error;

use crate::exprparse::{parse_in, Env, EvalError, Expr, Jet, ParseError, Scalar, Var};
use crate::helix::{constancy_report, synthesize, Constancy, HelixError, HelixSpec, SynthConfig};
use crate::linalg::{self, Mat};
use crate::nullframe::{transversal_from_seed, CurvatureSample, FrameError, SEED_TOL};
use crate::semimetric::{
    map_and_jacobian, AlongCurve, ChristoffelSymbols, CovariantError, MetricError, MetricField,
};

/// Relative threshold below which a pivot or a g-norm counts as zero.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Tolerance on the null-triad conditions of the umbilical diagnostic.
pub const TRIAD_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubmanifoldError {
    #[error("intrinsic dimension {intrinsic} must be at least 1 and below the ambient dimension {ambient}")]
    Dimension { intrinsic: usize, ambient: usize },
    #[error("map must have {expected} components, got {got}")]
    MapLength { expected: usize, got: usize },
    #[error("map component {index}: {source}")]
    MapComponent { index: usize, source: ParseError },
    #[error("point must have {expected} coordinates, got {got}")]
    PointLength { expected: usize, got: usize },
    #[error("vector must have {expected} components, got {got}")]
    VectorLength { expected: usize, got: usize },
    #[error("differential is rank deficient at {u:?}")]
    RankDeficient { u: Vec<f64> },
    #[error("induced metric is degenerate at {u:?} (det = {det:e})")]
    DegenerateInduced { u: Vec<f64>, det: f64 },
    #[error("normal space is degenerate at {u:?}")]
    DegenerateNormal { u: Vec<f64> },
    #[error("normal index {index} out of range (codimension {codim})")]
    NormalIndex { index: usize, codim: usize },
    #[error("induced metric has index {index}, expected {expected}")]
    IndexMismatch { index: usize, expected: usize },
    #[error("null triad violates {what} (deviation {value:e})")]
    Triad { what: &'static str, value: f64 },
    #[error("induced metric has no {0} direction for a null triad")]
    TriadSignature(&'static str),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Helix(#[from] HelixError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Covariant(#[from] CovariantError),
}

type Result<T> = std::result::Result<T, SubmanifoldError>;

/// An immersion given by component expressions in `u1..u_m`.
#[derive(Clone, Debug)]
pub struct Immersion {
    dim: usize,
    map: Vec<Expr>,
    ambient: MetricField,
}

/// Orthonormal basis of the normal space with its signs `g̃(Nₐ, Nₐ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalBasis {
    pub point: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub signs: Vec<f64>,
}

/// Orthonormal tangent frame in intrinsic coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentFrame {
    pub vectors: Vec<Vec<f64>>,
    pub signs: Vec<f64>,
}

/// `B`, the shape operators and `H` at one point, on the coordinate basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FundamentalForms {
    pub point: Vec<f64>,
    /// `b[i][j] = B(∂ᵢ, ∂ⱼ)`.
    pub b: Vec<Vec<Vec<f64>>>,
    /// `shape[a][i] = A^{Nₐ}(∂ᵢ)`.
    pub shape: Vec<Vec<Vec<f64>>>,
    pub mean_curvature: Vec<f64>,
    pub normals: NormalBasis,
}

/// Values of the derived forms at one point for given arguments.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedFormSample {
    pub point: Vec<f64>,
    pub nabla_b: Vec<f64>,
    pub nabla2_b: Vec<f64>,
    pub nabla_shape: Vec<f64>,
}

/// Pointwise immersion data over any scalar type.
struct Geometry<S> {
    m: usize,
    jac: Mat<S>,
    /// `hess[i][j]` is `∂ᵢ∂ⱼ f`.
    hess: Vec<Vec<Vec<S>>>,
    ga: Mat<S>,
    gamma_a: ChristoffelSymbols<S>,
    g_inv: Mat<S>,
    normals: Vec<Vec<S>>,
    signs: Vec<f64>,
}

fn lift_const<S: Scalar>(v: &[S]) -> Vec<Jet<S>> {
    v.iter().cloned().map(Jet::constant).collect()
}

/// `u + s d` as first-order jets in `s`.
fn lift_dir<S: Scalar>(u: &[S], d: &[S]) -> Vec<Jet<S>> {
    u.iter()
        .zip(d)
        .map(|(a, b)| Jet::from_coeffs(vec![a.clone(), b.clone()]))
        .collect()
}

fn coeffs_at<S: Scalar>(v: &[Jet<S>], k: usize) -> Vec<S> {
    v.iter().map(|j| j.coeff(k)).collect()
}

/// Kernel of `a` (rows × cols) by reduced row echelon form with pivots
/// chosen on plain values.
fn kernel<S: Scalar>(a: &Mat<S>, cols: usize) -> Vec<Vec<S>> {
    let mut a = a.clone();
    let rows = a.len();
    let scale = a
        .iter()
        .flatten()
        .map(|v| v.value().abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let p = (r..rows)
            .max_by(|&i, &j| a[i][c].value().abs().total_cmp(&a[j][c].value().abs()))
            .unwrap();
        if a[p][c].value().abs() <= DEGENERACY_TOL * scale {
            continue;
        }
        a.swap(p, r);
        let pv = a[r][c].clone();
        for k in 0..cols {
            a[r][k] = a[r][k].clone() / pv.clone();
        }
        for i in 0..rows {
            if i != r {
                let f = a[i][c].clone();
                for k in 0..cols {
                    let v = a[r][k].clone();
                    a[i][k] = a[i][k].clone() - f.clone() * v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![S::zero(); cols];
            v[free] = S::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[row][free].clone();
            }
            v
        })
        .collect()
}

/// Gram-Schmidt for an indefinite form. The candidate with the largest
/// `|g(v,v)|` is taken first; when every candidate is null, pairwise sums
/// are tried before giving up.
fn indefinite_gram_schmidt<S: Scalar>(
    g: &Mat<S>,
    mut vs: Vec<Vec<S>>,
) -> Option<(Vec<Vec<S>>, Vec<f64>)> {
    let mut out = Vec::new();
    let mut signs = Vec::new();
    let norm2 = |v: &[S]| linalg::values(v).iter().map(|x| x * x).sum::<f64>();
    while !vs.is_empty() {
        let q = |v: &[S]| linalg::bilinear(g, v, v).value();
        let best = (0..vs.len())
            .max_by(|&i, &j| q(&vs[i]).abs().total_cmp(&q(&vs[j]).abs()))
            .unwrap();
        if q(&vs[best]).abs() <= DEGENERACY_TOL * norm2(&vs[best]).max(1.0) {
            let mut fixed = false;
            'pairs: for i in 0..vs.len() {
                for j in i + 1..vs.len() {
                    let s = linalg::add(&vs[i], &vs[j]);
                    if q(&s).abs() > DEGENERACY_TOL * norm2(&s).max(1.0) {
                        vs[i] = s;
                        fixed = true;
                        break 'pairs;
                    }
                }
            }
            if !fixed {
                return None;
            }
            continue;
        }
        let v = vs.swap_remove(best);
        let qq = linalg::bilinear(g, &v, &v);
        let eps = qq.value().signum();
        let e = linalg::scale(&v, &qq.scale(eps).sqrt().recip());
        for w in vs.iter_mut() {
            let c = linalg::bilinear(g, w, &e).scale(eps);
            *w = linalg::axpy(w, &(-c), &e);
        }
        out.push(e);
        signs.push(eps);
    }
    Some((out, signs))
}

/// `∂²fᵃ/∂uⁱ∂uʲ` indexed `[i][j][a]`.
type Hessians<S> = Vec<Vec<Vec<S>>>;

/// Values, first derivatives and Hessian of the map, via second-order
/// directional jets and polarization.
fn map_derivatives<S: Scalar>(map: &[Expr], u: &[S]) -> Result<(Vec<S>, Mat<S>, Hessians<S>)> {
    let m = u.len();
    let n = map.len();
    let eval_dir = |d: &[f64]| -> Result<Vec<Jet<S>>> {
        let us: Vec<Jet<S>> = u
            .iter()
            .zip(d)
            .map(|(v, &di)| Jet::from_coeffs(vec![v.clone(), S::from_f64(di), S::zero()]))
            .collect();
        let env = Env::with_u(us);
        Ok(map
            .iter()
            .map(|e| e.eval(&env).map(|j| j.to_order(2)))
            .collect::<std::result::Result<_, _>>()?)
    };
    let mut unit = Vec::with_capacity(m);
    for i in 0..m {
        let mut d = vec![0.0; m];
        d[i] = 1.0;
        unit.push(eval_dir(&d)?);
    }
    let x: Vec<S> = if m > 0 {
        coeffs_at(&unit[0], 0)
    } else {
        let env = Env::with_u(Vec::<S>::new());
        map.iter()
            .map(|e| e.eval(&env))
            .collect::<std::result::Result<_, _>>()?
    };
    let mut jac = linalg::zeros::<S>(n, m);
    for (i, ji) in unit.iter().enumerate() {
        for a in 0..n {
            jac[a][i] = ji[a].coeff(1);
        }
    }
    let mut hess = vec![vec![vec![S::zero(); n]; m]; m];
    for i in 0..m {
        hess[i][i] = coeffs_at(&unit[i], 2)
            .iter()
            .map(|c| c.scale(2.0))
            .collect();
    }
    for i in 0..m {
        for j in i + 1..m {
            let mut d = vec![0.0; m];
            d[i] = 1.0;
            d[j] = 1.0;
            let both = eval_dir(&d)?;
            let v: Vec<S> = (0..n)
                .map(|a| both[a].coeff(2) - unit[i][a].coeff(2) - unit[j][a].coeff(2))
                .collect();
            hess[j][i] = v.clone();
            hess[i][j] = v;
        }
    }
    Ok((x, jac, hess))
}

impl<S: Scalar> Geometry<S> {
    fn jx(&self, x: &[S]) -> Vec<S> {
        linalg::mat_vec(&self.jac, x)
    }

    fn ambient_ip(&self, a: &[S], b: &[S]) -> S {
        linalg::bilinear(&self.ga, a, b)
    }

    /// `Σ ε_a g̃(V, N_a) N_a`.
    fn normal_part(&self, v: &[S]) -> Vec<S> {
        let n = v.len();
        let mut out = vec![S::zero(); n];
        for (na, &eps) in self.normals.iter().zip(&self.signs) {
            let c = self.ambient_ip(v, na).scale(eps);
            out = linalg::axpy(&out, &c, na);
        }
        out
    }

    /// Intrinsic coordinates of the tangent part of `V`: `g⁻¹ Jᵀ G̃ V`.
    fn tangent_coords(&self, v: &[S]) -> Vec<S> {
        let gv = linalg::mat_vec(&self.ga, v);
        let jt = linalg::mat_vec(&linalg::transpose(&self.jac), &gv);
        linalg::mat_vec(&self.g_inv, &jt)
    }

    /// `d²f(X, Y) + Γ̃(JX, JY)`, the ambient derivative of `f_*Y` along `X`
    /// for coordinate-constant fields.
    fn ambient_derivative(&self, x: &[S], y: &[S]) -> Vec<S> {
        let n = self.jac.len();
        let mut v = vec![S::zero(); n];
        for i in 0..self.m {
            for j in 0..self.m {
                let c = x[i].clone() * y[j].clone();
                v = linalg::axpy(&v, &c, &self.hess[i][j]);
            }
        }
        linalg::add(&v, &self.gamma_a.contract(&self.jx(x), &self.jx(y)))
    }

    fn b(&self, x: &[S], y: &[S]) -> Vec<S> {
        self.normal_part(&self.ambient_derivative(x, y))
    }

    /// `∇_X Y` of the induced connection for coordinate-constant fields.
    fn levi(&self, x: &[S], y: &[S]) -> Vec<S> {
        self.tangent_coords(&self.ambient_derivative(x, y))
    }

    fn induced(&self) -> Mat<S> {
        crate::semimetric::pull_back(&self.ga, &self.jac)
    }

    fn tangent_frame(&self, u: &[f64]) -> Result<(Vec<Vec<S>>, Vec<f64>)> {
        let g = self.induced();
        indefinite_gram_schmidt(&g, linalg::identity(self.m)).ok_or_else(|| {
            SubmanifoldError::DegenerateInduced {
                u: u.to_vec(),
                det: 0.0,
            }
        })
    }

    fn mean_curvature(&self, u: &[f64]) -> Result<Vec<S>> {
        let (frame, signs) = self.tangent_frame(u)?;
        Ok(self.mean_curvature_in(&frame, &signs))
    }

    fn mean_curvature_in(&self, frame: &[Vec<S>], signs: &[f64]) -> Vec<S> {
        let n = self.jac.len();
        let mut h = vec![S::zero(); n];
        for (e, &eps) in frame.iter().zip(signs) {
            h = linalg::axpy(&h, &S::from_f64(eps / self.m as f64), &self.b(e, e));
        }
        h
    }
}

impl Immersion {
    pub fn new(intrinsic_dim: usize, map: Vec<Expr>, ambient: MetricField) -> Result<Immersion> {
        let n = ambient.dim();
        if intrinsic_dim == 0 || intrinsic_dim > n {
            return Err(SubmanifoldError::Dimension {
                intrinsic: intrinsic_dim,
                ambient: n,
            });
        }
        if map.len() != n {
            return Err(SubmanifoldError::MapLength {
                expected: n,
                got: map.len(),
            });
        }
        Ok(Immersion {
            dim: intrinsic_dim,
            map,
            ambient,
        })
    }

    /// Parses the map components in `u1..u_m`.
    pub fn parse<T: AsRef<str>>(
        intrinsic_dim: usize,
        map: &[T],
        ambient: MetricField,
    ) -> Result<Immersion> {
        let vars: Vec<Var> = (0..intrinsic_dim).map(Var::U).collect();
        let exprs = map
            .iter()
            .enumerate()
            .map(|(index, s)| {
                parse_in(s.as_ref(), &vars).map_err(|source| SubmanifoldError::MapComponent {
                    index: index + 1,
                    source,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Immersion::new(intrinsic_dim, exprs, ambient)
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient.dim()
    }

    pub fn codim(&self) -> usize {
        self.ambient.dim() - self.dim
    }

    pub fn ambient(&self) -> &MetricField {
        &self.ambient
    }

    pub fn map(&self) -> &[Expr] {
        &self.map
    }

    /// The induced metric as a field on the intrinsic chart.
    pub fn induced_metric_field(&self) -> MetricField {
        MetricField::pullback(self.dim, self.map.clone(), self.ambient.clone())
            .expect("dimensions validated at construction")
    }

    fn check_point(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim {
            return Err(SubmanifoldError::PointLength {
                expected: self.dim,
                got: u.len(),
            });
        }
        Ok(())
    }

    fn check_vector(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(SubmanifoldError::VectorLength {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// `f(u)`.
    pub fn point(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_point(u)?;
        let env = Env::with_u(u.to_vec());
        Ok(self
            .map
            .iter()
            .map(|e| e.eval(&env))
            .collect::<std::result::Result<_, _>>()?)
    }

    /// Jacobian `∂f^a/∂uⁱ` at `u`.
    pub fn differential(&self, u: &[f64]) -> Result<Mat<f64>> {
        self.check_point(u)?;
        Ok(map_and_jacobian(&self.map, u)?.1)
    }

    fn geometry<S: Scalar>(&self, u: &[S]) -> Result<Geometry<S>> {
        let uv = linalg::values(u);
        let (x, jac, hess) = map_derivatives(&self.map, u)?;
        if !kernel(&linalg::mat_values(&jac), self.dim).is_empty() {
            return Err(SubmanifoldError::RankDeficient { u: uv });
        }
        let ga = self.ambient.components(&x)?;
        let gav = linalg::mat_values(&ga);
        if linalg::det(&gav).abs() <= crate::semimetric::DEGENERACY_TOL {
            return Err(MetricError::Degenerate {
                point: linalg::values(&x),
                det: linalg::det(&gav),
            }
            .into());
        }
        let gamma_a = self.ambient.christoffel(&x)?;
        // normal space: kernel of Jᵀ G̃
        let jtg: Mat<S> = (0..self.dim)
            .map(|i| {
                (0..self.ambient.dim())
                    .map(|b| {
                        (0..self.ambient.dim()).fold(S::zero(), |acc, a| {
                            acc + jac[a][i].clone() * ga[a][b].clone()
                        })
                    })
                    .collect()
            })
            .collect();
        let ker = kernel(&jtg, self.ambient.dim());
        let (normals, signs) = indefinite_gram_schmidt(&ga, ker)
            .ok_or_else(|| SubmanifoldError::DegenerateNormal { u: uv.clone() })?;
        let g = crate::semimetric::pull_back(&ga, &jac);
        let det = linalg::det(&linalg::mat_values(&g));
        if det.abs() <= crate::semimetric::DEGENERACY_TOL {
            return Err(SubmanifoldError::DegenerateInduced { u: uv, det });
        }
        let g_inv =
            linalg::inverse(&g).ok_or(SubmanifoldError::DegenerateInduced { u: uv, det })?;
        Ok(Geometry {
            m: self.dim,
            jac,
            hess,
            ga,
            gamma_a,
            g_inv,
            normals,
            signs,
        })
    }

    fn geometry_at(&self, u: &[f64]) -> Result<Geometry<f64>> {
        self.check_point(u)?;
        self.geometry(u)
    }

    /// Induced metric `gᵢⱼ = g̃(∂ᵢf, ∂ⱼf)`.
    pub fn induced_metric(&self, u: &[f64]) -> Result<Mat<f64>> {
        Ok(self.geometry_at(u)?.induced())
    }

    pub fn normal_basis(&self, u: &[f64]) -> Result<NormalBasis> {
        let geo = self.geometry_at(u)?;
        Ok(NormalBasis {
            point: u.to_vec(),
            vectors: geo.normals,
            signs: geo.signs,
        })
    }

    pub fn tangent_frame(&self, u: &[f64]) -> Result<TangentFrame> {
        let (vectors, signs) = self.geometry_at(u)?.tangent_frame(u)?;
        Ok(TangentFrame { vectors, signs })
    }

    /// `B(X, Y)` as an ambient vector.
    pub fn second_fundamental(&self, u: &[f64], x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_vector(x)?;
        self.check_vector(y)?;
        Ok(self.geometry_at(u)?.b(x, y))
    }

    fn check_normal(&self, a: usize) -> Result<()> {
        if a >= self.codim() {
            return Err(SubmanifoldError::NormalIndex {
                index: a,
                codim: self.codim(),
            });
        }
        Ok(())
    }

    fn shape_gen<S: Scalar>(&self, u: &[S], a: usize, x: &[S]) -> Result<Vec<S>> {
        let geo = self.geometry(u)?;
        let geo_s = self.geometry(&lift_dir(u, x))?;
        let n = &geo.normals[a];
        let dn = coeffs_at(&geo_s.normals[a], 1);
        let v = linalg::add(&dn, &geo.gamma_a.contract(&geo.jx(x), n));
        Ok(geo.tangent_coords(&v).into_iter().map(|c| -c).collect())
    }

    /// `Aᴺ(X)` for the `a`-th basis normal, minus the tangent part of `∇̃_X N`.
    pub fn shape_operator(&self, u: &[f64], a: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(u)?;
        self.check_vector(x)?;
        self.check_normal(a)?;
        self.shape_gen(u, a, x)
    }

    /// `|g(Aᴺ(X), Y) − g̃(B(X, Y), N)|`.
    pub fn duality_residual(&self, u: &[f64], x: &[f64], y: &[f64], a: usize) -> Result<f64> {
        let ax = self.shape_operator(u, a, x)?;
        let geo = self.geometry_at(u)?;
        self.check_vector(y)?;
        let lhs = linalg::bilinear(&geo.induced(), &ax, y);
        let rhs = geo.ambient_ip(&geo.b(x, y), &geo.normals[a]);
        Ok((lhs - rhs).abs())
    }

    /// `H = (1/m) Σ εⱼ B(Eⱼ, Eⱼ)`.
    pub fn mean_curvature(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.geometry_at(u)?.mean_curvature(u)
    }

    /// `H` computed over a caller-supplied orthonormal tangent frame.
    pub fn mean_curvature_in(&self, u: &[f64], frame: &TangentFrame) -> Result<Vec<f64>> {
        Ok(self
            .geometry_at(u)?
            .mean_curvature_in(&frame.vectors, &frame.signs))
    }

    /// `max ‖B(Eᵢ, Eⱼ) − g(Eᵢ, Eⱼ) H‖` over an orthonormal frame.
    pub fn umbilical_residual(&self, u: &[f64]) -> Result<f64> {
        let geo = self.geometry_at(u)?;
        let (frame, signs) = geo.tangent_frame(u)?;
        let h = geo.mean_curvature_in(&frame, &signs);
        let mut worst: f64 = 0.0;
        for i in 0..frame.len() {
            for j in i..frame.len() {
                let b = geo.b(&frame[i], &frame[j]);
                let gij = if i == j { signs[i] } else { 0.0 };
                let r = linalg::axpy(&b, &(-gij), &h);
                worst = worst.max(linalg::norm(&r));
            }
        }
        Ok(worst)
    }

    /// `max ‖B(Eᵢ, Eⱼ)‖` over an orthonormal frame.
    pub fn geodesic_residual(&self, u: &[f64]) -> Result<f64> {
        let geo = self.geometry_at(u)?;
        let (frame, _) = geo.tangent_frame(u)?;
        let mut worst: f64 = 0.0;
        for i in 0..frame.len() {
            for j in i..frame.len() {
                worst = worst.max(linalg::norm(&geo.b(&frame[i], &frame[j])));
            }
        }
        Ok(worst)
    }

    /// `‖∇⊥_X H‖`.
    pub fn parallel_h_residual(&self, u: &[f64], x: &[f64]) -> Result<f64> {
        self.check_point(u)?;
        self.check_vector(x)?;
        let geo = self.geometry(u)?;
        let h = geo.mean_curvature(u)?;
        let geo_s = self.geometry(&lift_dir(u, x))?;
        let hs = geo_s.mean_curvature(u)?;
        let v = linalg::add(&coeffs_at(&hs, 1), &geo.gamma_a.contract(&geo.jx(x), &h));
        Ok(linalg::norm(&geo.normal_part(&v)))
    }

    fn nabla_b_gen<S: Scalar>(&self, u: &[S], x: &[S], y: &[S], z: &[S]) -> Result<Vec<S>> {
        let geo = self.geometry(u)?;
        let geo_s = self.geometry(&lift_dir(u, z))?;
        let bs = geo_s.b(&lift_const(x), &lift_const(y));
        let b0 = coeffs_at(&bs, 0);
        let v = linalg::add(&coeffs_at(&bs, 1), &geo.gamma_a.contract(&geo.jx(z), &b0));
        let t1 = geo.normal_part(&v);
        let t2 = geo.b(&geo.levi(z, x), y);
        let t3 = geo.b(&geo.levi(z, y), x);
        Ok(linalg::sub(&linalg::sub(&t1, &t2), &t3))
    }

    /// `(∇̃B)(X, Y, Z) = ∇⊥_Z(B(X, Y)) − B(∇_Z X, Y) − B(∇_Z Y, X)`.
    pub fn nabla_b(&self, u: &[f64], x: &[f64], y: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.check_point(u)?;
        for v in [x, y, z] {
            self.check_vector(v)?;
        }
        self.nabla_b_gen(u, x, y, z)
    }

    /// `(∇̃²B)(X, Y, Z, V) = ∇⊥_V((∇̃B)(X, Y, Z)) − (∇̃B)(∇_V X, Y, Z)
    /// − (∇̃B)(X, ∇_V Y, Z) − (∇̃B)(X, Y, ∇_V Z)`.
    pub fn nabla2_b(
        &self,
        u: &[f64],
        x: &[f64],
        y: &[f64],
        z: &[f64],
        v: &[f64],
    ) -> Result<Vec<f64>> {
        self.check_point(u)?;
        for w in [x, y, z, v] {
            self.check_vector(w)?;
        }
        let geo = self.geometry(u)?;
        let ts = self.nabla_b_gen(
            &lift_dir(u, v),
            &lift_const(x),
            &lift_const(y),
            &lift_const(z),
        )?;
        let t0 = coeffs_at(&ts, 0);
        let w = linalg::add(&coeffs_at(&ts, 1), &geo.gamma_a.contract(&geo.jx(v), &t0));
        let mut out = geo.normal_part(&w);
        out = linalg::sub(&out, &self.nabla_b_gen(u, &geo.levi(v, x), y, z)?);
        out = linalg::sub(&out, &self.nabla_b_gen(u, x, &geo.levi(v, y), z)?);
        out = linalg::sub(&out, &self.nabla_b_gen(u, x, y, &geo.levi(v, z))?);
        Ok(out)
    }

    /// `(∇̃_X Aᴺ)(Y) = ∇_X(Aᴺ Y) − A^{∇⊥_X N}(Y) − Aᴺ(∇_X Y)`.
    pub fn nabla_shape(&self, u: &[f64], a: usize, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(u)?;
        self.check_vector(x)?;
        self.check_vector(y)?;
        self.check_normal(a)?;
        let geo = self.geometry(u)?;
        let shape_s = self.shape_gen(&lift_dir(u, x), a, &lift_const(y))?;
        let ay = coeffs_at(&shape_s, 0);
        let t1 = linalg::add(&coeffs_at(&shape_s, 1), &geo.levi(x, &ay));
        let geo_s = self.geometry(&lift_dir(u, x))?;
        let dn = coeffs_at(&geo_s.normals[a], 1);
        let v = linalg::add(&dn, &geo.gamma_a.contract(&geo.jx(x), &geo.normals[a]));
        let mut t2 = vec![0.0; self.dim];
        for b in 0..self.codim() {
            let c = geo.ambient_ip(&v, &geo.normals[b]) * geo.signs[b];
            t2 = linalg::axpy(&t2, &c, &self.shape_gen(u, b, y)?);
        }
        let t3 = self.shape_gen(u, a, &geo.levi(x, y))?;
        Ok(linalg::sub(&linalg::sub(&t1, &t2), &t3))
    }

    pub fn forms(&self, u: &[f64]) -> Result<FundamentalForms> {
        let geo = self.geometry_at(u)?;
        let basis: Vec<Vec<f64>> = linalg::identity(self.dim);
        let b = basis
            .iter()
            .map(|x| basis.iter().map(|y| geo.b(x, y)).collect())
            .collect();
        let shape = (0..self.codim())
            .map(|a| {
                basis
                    .iter()
                    .map(|x| self.shape_gen(u, a, x))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FundamentalForms {
            point: u.to_vec(),
            b,
            shape,
            mean_curvature: geo.mean_curvature(u)?,
            normals: NormalBasis {
                point: u.to_vec(),
                vectors: geo.normals,
                signs: geo.signs,
            },
        })
    }

    /// Derived forms for the given arguments; the shape derivative uses the
    /// first basis normal.
    pub fn derived_forms(
        &self,
        u: &[f64],
        x: &[f64],
        y: &[f64],
        z: &[f64],
        v: &[f64],
    ) -> Result<DerivedFormSample> {
        Ok(DerivedFormSample {
            point: u.to_vec(),
            nabla_b: self.nabla_b(u, x, y, z)?,
            nabla2_b: self.nabla2_b(u, x, y, z, v)?,
            nabla_shape: if self.codim() > 0 {
                self.nabla_shape(u, 0, x, y)?
            } else {
                vec![0.0; self.dim]
            },
        })
    }
}

/// Null triad `ξᵢ, ξⱼ` (null, `g(ξᵢ, ξⱼ) = 1`) and unit timelike `ξ_k`
/// orthogonal to both, from an orthonormal frame of a 3D index-2 induced
/// metric: `ξᵢ = (E_t + E_s)/√2`, `ξⱼ = (−E_t + E_s)/√2`, `ξ_k = E_t'`.
pub fn null_triad(imm: &Immersion, u: &[f64]) -> Result<[Vec<f64>; 3]> {
    let frame = imm.tangent_frame(u)?;
    let time: Vec<usize> = (0..frame.signs.len())
        .filter(|&i| frame.signs[i] < 0.0)
        .collect();
    let space: Vec<usize> = (0..frame.signs.len())
        .filter(|&i| frame.signs[i] > 0.0)
        .collect();
    if time.len() < 2 {
        return Err(SubmanifoldError::TriadSignature("second timelike"));
    }
    let Some(&s) = space.first() else {
        return Err(SubmanifoldError::TriadSignature("spacelike"));
    };
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (et, es) = (&frame.vectors[time[1]], &frame.vectors[s]);
    let xi = linalg::scale(&linalg::add(et, es), &r);
    let xj = linalg::scale(&linalg::sub(es, et), &r);
    Ok([xi, xj, frame.vectors[time[0]].clone()])
}

/// `D₁ = 4B(ξᵢ, ξⱼ) + 3B(ξ_k, ξ_k)` and `D₂ = B(ξᵢ, ξᵢ)`. At an umbilical
/// point `D₁ = H` and `D₂ = 0`.
pub fn umbilical_diagnostic(
    imm: &Immersion,
    u: &[f64],
    xi: &[f64],
    xj: &[f64],
    xk: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = imm.induced_metric(u)?;
    let ip = |a: &[f64], b: &[f64]| linalg::bilinear(&g, a, b);
    for (what, value) in [
        ("g(ξi,ξi) = 0", ip(xi, xi)),
        ("g(ξj,ξj) = 0", ip(xj, xj)),
        ("g(ξi,ξj) = 1", ip(xi, xj) - 1.0),
        ("g(ξi,ξk) = 0", ip(xi, xk)),
        ("g(ξj,ξk) = 0", ip(xj, xk)),
        ("g(ξk,ξk) = -1", ip(xk, xk) + 1.0),
    ] {
        if value.abs() > TRIAD_TOL {
            return Err(SubmanifoldError::Triad {
                what,
                value: value.abs(),
            });
        }
    }
    let bij = imm.second_fundamental(u, xi, xj)?;
    let bkk = imm.second_fundamental(u, xk, xk)?;
    let d1 = (0..bij.len())
        .map(|a| 4.0 * bij[a] + 3.0 * bkk[a])
        .collect();
    let d2 = imm.second_fundamental(u, xi, xi)?;
    Ok((d1, d2))
}

/// How the screen part `s = ∇̃ζ̃ζ̃ − h̃ζ̃` of the ambient acceleration sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScreenKind {
    Timelike,
    Spacelike,
    Null,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferRow {
    pub t: f64,
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    pub intrinsic: CurvatureSample,
    pub h: f64,
    /// `√(−g̃(s,s))` for a timelike screen part, `−√g̃(s,s)` for a spacelike one.
    pub k1: f64,
    /// Undefined when the screen part is null.
    pub k2: Option<f64>,
    pub screen: ScreenKind,
    pub geodesic_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferReport {
    pub rows: Vec<TransferRow>,
    pub intrinsic_constancy: Constancy,
    /// Ambient constancy; the `k2` entry ignores rows where it is undefined.
    pub constancy: Constancy,
    pub k2_undefined: usize,
    pub max_geodesic_residual: f64,
    pub min_geodesic_residual: f64,
}

/// Threshold on `|g̃(s,s)|` below which the screen part counts as null.
pub const SCREEN_NULL_TOL: f64 = 1e-9;

/// Synthesizes the helix in the induced metric of a 3D immersion, pushes it
/// into the ambient chart and measures its ambient curvatures. The ambient
/// transversal uses `f_*N` as screen seed.
pub fn helix_transfer(
    imm: &Immersion,
    spec: &HelixSpec,
    grid: &[f64],
    config: &SynthConfig,
) -> Result<TransferReport> {
    if imm.intrinsic_dim() != 3 {
        return Err(SubmanifoldError::Dimension {
            intrinsic: imm.intrinsic_dim(),
            ambient: imm.ambient_dim(),
        });
    }
    let spec = HelixSpec {
        metric: imm.induced_metric_field(),
        ..spec.clone()
    };
    let index = linalg::negative_index(&imm.induced_metric(&spec.initial_point)?);
    if index != 2 {
        return Err(SubmanifoldError::IndexMismatch { index, expected: 2 });
    }
    let trace = synthesize(&spec, grid, config)?;
    let intrinsic = trace.curvature_samples()?;
    let mut rows = Vec::with_capacity(trace.len());
    for (i, k) in intrinsic.iter().enumerate() {
        let (pos, n) = trace.jets(i)?;
        let env = Env::with_u(pos.clone());
        let x: Vec<Jet> = imm
            .map()
            .iter()
            .map(|e| e.eval(&env).map(|j| j.to_order(pos[0].order())))
            .collect::<std::result::Result<_, _>>()?;
        let (_, jac) = map_and_jacobian(imm.map(), &pos)?;
        let seed = linalg::mat_vec(&jac, &n);
        let along = AlongCurve::new(imm.ambient(), &x)?;
        let zeta = along.velocity().to_vec();
        let nt = transversal_from_seed(along.metric_jets(), &zeta, &seed, SEED_TOL)
            .ok_or(FrameError::NoUsableSeed { t: k.t })?;
        let accel = along.nabla(&zeta)?;
        let dn = along.nabla(&nt)?;
        let (zv, nv, av, dnv) = (
            linalg::values(&zeta),
            linalg::values(&nt),
            linalg::values(&accel),
            linalg::values(&dn),
        );
        let h = along.inner_value(&av, &nv);
        let s = linalg::axpy(&av, &(-h), &zv);
        let q = along.inner_value(&s, &s);
        let (k1, k2, screen) = if q.abs() <= SCREEN_NULL_TOL {
            (q.abs().sqrt(), None, ScreenKind::Null)
        } else if q < 0.0 {
            let k1 = (-q).sqrt();
            let w = linalg::scale(&s, &(1.0 / k1));
            (k1, Some(-along.inner_value(&dnv, &w)), ScreenKind::Timelike)
        } else {
            let k1 = -q.sqrt();
            let w = linalg::scale(&s, &(1.0 / q.sqrt()));
            (k1, Some(along.inner_value(&dnv, &w)), ScreenKind::Spacelike)
        };
        let u = trace.samples[i].point.clone();
        rows.push(TransferRow {
            t: k.t,
            geodesic_residual: imm.geodesic_residual(&u)?,
            u,
            x: linalg::values(&x),
            intrinsic: *k,
            h,
            k1,
            k2,
            screen,
        });
    }
    let ambient: Vec<CurvatureSample> = rows
        .iter()
        .map(|r| CurvatureSample::new(r.t, r.h, r.k1, r.k2.unwrap_or(0.0)))
        .collect();
    let mut constancy = constancy_report(&ambient)?;
    let k2s: Vec<f64> = rows.iter().filter_map(|r| r.k2).collect();
    constancy.k2 = match k2s.first() {
        Some(&first) => k2s.iter().map(|v| (v - first).abs()).fold(0.0, f64::max),
        None => 0.0,
    };
    let geo: Vec<f64> = rows.iter().map(|r| r.geodesic_residual).collect();
    Ok(TransferReport {
        intrinsic_constancy: constancy_report(&intrinsic)?,
        constancy,
        k2_undefined: rows.iter().filter(|r| r.k2.is_none()).count(),
        max_geodesic_residual: geo.iter().copied().fold(0.0, f64::max),
        min_geodesic_residual: geo.iter().copied().fold(f64::INFINITY, f64::min),
        rows,
    })
}
