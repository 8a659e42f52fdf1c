//! Metric fields on a single coordinate chart: evaluation, inverse,
//! Levi-Civita Christoffel symbols and covariant differentiation along curves.
//!
//! Metric derivatives come from jets in each coordinate direction, never from
//! finite differences. All evaluation routines are generic over [`Scalar`], so
//! the same code yields the metric along a curve as a Taylor series in `t`.

use std::fmt;

use thiserror::Error;

use crate::exprparse::{parse_in, Env, EvalError, Expr, Jet, ParseError, Scalar, Var};
use crate::linalg::{self, Mat};

/// Smallest admissible `|det g|`.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("metric not symmetric at ({0},{1})")]
    Asymmetric(usize, usize),
    #[error("metric is degenerate at {point:?} (det = {det:e})")]
    Degenerate { point: Vec<f64>, det: f64 },
    #[error("metric dimension must be between 2 and 4, got {0}")]
    BadDimension(usize),
    #[error("metric entries must form a square matrix")]
    NotSquare,
    #[error("diagonal signs must be +1 or -1, got {0}")]
    BadSign(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("metric entry ({row},{col}): {source}")]
    Entry {
        row: usize,
        col: usize,
        source: ParseError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("immersion map must have {expected} components, got {got}")]
    MapLength { expected: usize, got: usize },
}

/// Signs of a diagonal metric together with its index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub dim: usize,
    pub signs: Vec<i8>,
    /// Number of negative entries.
    pub index: usize,
}

impl Signature {
    pub fn new(signs: &[i8]) -> Signature {
        Signature {
            dim: signs.len(),
            signs: signs.to_vec(),
            index: signs.iter().filter(|&&s| s < 0).count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Diag(Vec<f64>),
    Field(Vec<Vec<Expr>>),
    /// Metric pulled back through a map `u ↦ f(u)` into an ambient field.
    Pullback {
        map: Vec<Expr>,
        ambient: Box<MetricField>,
    },
}

/// A metric `g_ij(x)` on one chart.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    dim: usize,
    kind: Kind,
}

/// `Γᵏᵢⱼ` stored as a flat `dim³` array, symmetric in the lower indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ChristoffelSymbols<S> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> ChristoffelSymbols<S> {
    pub fn zero(dim: usize) -> Self {
        ChristoffelSymbols {
            dim,
            data: vec![S::zero(); dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γᵏᵢⱼ` (zero-based indices).
    pub fn get(&self, k: usize, i: usize, j: usize) -> &S {
        &self.data[(k * self.dim + i) * self.dim + j]
    }

    /// `Γ(a, b)ᵏ = Γᵏᵢⱼ aⁱ bʲ`.
    pub fn contract(&self, a: &[S], b: &[S]) -> Vec<S> {
        let n = self.dim;
        (0..n)
            .map(|k| {
                let mut acc = S::zero();
                for i in 0..n {
                    for j in 0..n {
                        acc = acc + self.get(k, i, j).clone() * a[i].clone() * b[j].clone();
                    }
                }
                acc
            })
            .collect()
    }

    pub fn values(&self) -> ChristoffelSymbols<f64> {
        ChristoffelSymbols {
            dim: self.dim,
            data: self.data.iter().map(Scalar::value).collect(),
        }
    }
}

/// Christoffel symbols evaluated at a chart point.
#[derive(Clone, Debug, PartialEq)]
pub struct ChristoffelEval {
    pub point: Vec<f64>,
    pub gamma: ChristoffelSymbols<f64>,
}

impl ChristoffelEval {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        *self.gamma.get(k, i, j)
    }
}

fn coord_vars(prefix: fn(usize) -> Var, n: usize) -> Vec<Var> {
    (0..n).map(prefix).collect()
}

impl MetricField {
    /// Flat diagonal metric with `±1` entries.
    pub fn diag(signs: &[f64]) -> Result<MetricField, MetricError> {
        check_dim(signs.len())?;
        if let Some(&s) = signs.iter().find(|&&s| s != 1.0 && s != -1.0) {
            return Err(MetricError::BadSign(s));
        }
        Ok(MetricField {
            dim: signs.len(),
            kind: Kind::Diag(signs.to_vec()),
        })
    }

    /// Metric from entry texts in `x1..x_dim`. The supplied text must be
    /// symmetric (compared after whitespace removal).
    pub fn from_entries<T: AsRef<str>>(entries: &[Vec<T>]) -> Result<MetricField, MetricError> {
        let n = entries.len();
        check_dim(n)?;
        if entries.iter().any(|row| row.len() != n) {
            return Err(MetricError::NotSquare);
        }
        let squash = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
        for i in 0..n {
            for j in i + 1..n {
                if squash(entries[i][j].as_ref()) != squash(entries[j][i].as_ref()) {
                    return Err(MetricError::Asymmetric(i + 1, j + 1));
                }
            }
        }
        let vars = coord_vars(Var::X, n);
        let mut rows = Vec::with_capacity(n);
        for (i, row) in entries.iter().enumerate() {
            let mut parsed = Vec::with_capacity(n);
            for (j, text) in row.iter().enumerate() {
                let e = parse_in(text.as_ref(), &vars).map_err(|source| MetricError::Entry {
                    row: i + 1,
                    col: j + 1,
                    source,
                })?;
                parsed.push(e);
            }
            rows.push(parsed);
        }
        Ok(MetricField {
            dim: n,
            kind: Kind::Field(rows),
        })
    }

    /// Pullback of `ambient` through `map` (expressions in `u1..u_m`).
    pub fn pullback(
        intrinsic_dim: usize,
        map: Vec<Expr>,
        ambient: MetricField,
    ) -> Result<MetricField, MetricError> {
        check_dim(intrinsic_dim)?;
        if map.len() != ambient.dim {
            return Err(MetricError::MapLength {
                expected: ambient.dim,
                got: map.len(),
            });
        }
        Ok(MetricField {
            dim: intrinsic_dim,
            kind: Kind::Pullback {
                map,
                ambient: Box::new(ambient),
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Signature when the field is flat diagonal.
    pub fn diag_signature(&self) -> Option<Signature> {
        match &self.kind {
            Kind::Diag(s) => Some(Signature::new(
                &s.iter().map(|&v| v as i8).collect::<Vec<_>>(),
            )),
            _ => None,
        }
    }

    /// True when no entry depends on the coordinates.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            Kind::Diag(_) => true,
            Kind::Field(rows) => rows.iter().flatten().all(Expr::is_constant),
            Kind::Pullback { .. } => false,
        }
    }

    fn check_point_len(&self, n: usize) -> Result<(), MetricError> {
        if n != self.dim {
            return Err(MetricError::DimensionMismatch {
                expected: self.dim,
                got: n,
            });
        }
        Ok(())
    }

    /// Metric components at `x` over any scalar type. No degeneracy check.
    pub fn components<S: Scalar>(&self, x: &[S]) -> Result<Mat<S>, MetricError> {
        self.check_point_len(x.len())?;
        match &self.kind {
            Kind::Diag(signs) => {
                let mut m = linalg::zeros(self.dim, self.dim);
                for (i, &s) in signs.iter().enumerate() {
                    m[i][i] = S::from_f64(s);
                }
                Ok(m)
            }
            Kind::Field(rows) => {
                let env = Env::with_x(x.to_vec());
                let mut m = linalg::zeros(self.dim, self.dim);
                for i in 0..self.dim {
                    for j in i..self.dim {
                        let v = rows[i][j].eval(&env)?;
                        m[j][i] = v.clone();
                        m[i][j] = v;
                    }
                }
                Ok(m)
            }
            Kind::Pullback { map, ambient } => {
                let (f, jac) = map_and_jacobian(map, x)?;
                let ga = ambient.components(&f)?;
                Ok(pull_back(&ga, &jac))
            }
        }
    }

    /// `g(p)` with the non-degeneracy check.
    pub fn metric_at(&self, p: &[f64]) -> Result<Mat<f64>, MetricError> {
        let g = self.components(p)?;
        let det = linalg::det(&g);
        if det.abs() <= DEGENERACY_TOL {
            return Err(MetricError::Degenerate {
                point: p.to_vec(),
                det,
            });
        }
        Ok(g)
    }

    pub fn inverse_at(&self, p: &[f64]) -> Result<Mat<f64>, MetricError> {
        let g = self.metric_at(p)?;
        linalg::inverse(&g).ok_or_else(|| MetricError::Degenerate {
            point: p.to_vec(),
            det: 0.0,
        })
    }

    /// Number of negative eigenvalues of `g(p)`.
    pub fn index_at(&self, p: &[f64]) -> Result<usize, MetricError> {
        Ok(linalg::negative_index(&self.metric_at(p)?))
    }

    /// Christoffel symbols over any scalar type. Metric derivatives are
    /// taken with first-order jets along each coordinate axis.
    pub fn christoffel<S: Scalar>(&self, x: &[S]) -> Result<ChristoffelSymbols<S>, MetricError> {
        self.check_point_len(x.len())?;
        let n = self.dim;
        if self.is_constant() {
            // still validate the point so degenerate constants are reported
            let g = self.components(x)?;
            self.ensure_nondegenerate(&g, x)?;
            return Ok(ChristoffelSymbols::zero(n));
        }
        let g = self.components(x)?;
        let ginv = self.ensure_nondegenerate(&g, x)?;
        // dg[k][i][j] = ∂_k g_ij
        let mut dg: Vec<Mat<S>> = Vec::with_capacity(n);
        for k in 0..n {
            let xs: Vec<Jet<S>> = x
                .iter()
                .enumerate()
                .map(|(l, v)| {
                    if l == k {
                        Jet::variable(v.clone(), 1)
                    } else {
                        Jet::constant(v.clone())
                    }
                })
                .collect();
            let gk = self.components(&xs)?;
            dg.push(
                gk.into_iter()
                    .map(|row| row.into_iter().map(|e| e.coeff(1)).collect())
                    .collect(),
            );
        }
        let mut data = vec![S::zero(); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = S::zero();
                    for l in 0..n {
                        let term = dg[i][j][l].clone() + dg[j][i][l].clone() - dg[l][i][j].clone();
                        acc = acc + ginv[k][l].clone() * term;
                    }
                    let v = acc.scale(0.5);
                    data[(k * n + j) * n + i] = v.clone();
                    data[(k * n + i) * n + j] = v;
                }
            }
        }
        Ok(ChristoffelSymbols { dim: n, data })
    }

    fn ensure_nondegenerate<S: Scalar>(&self, g: &Mat<S>, x: &[S]) -> Result<Mat<S>, MetricError> {
        let det = linalg::det(g).value();
        let degenerate = || MetricError::Degenerate {
            point: linalg::values(x),
            det,
        };
        if det.abs() <= DEGENERACY_TOL {
            return Err(degenerate());
        }
        linalg::inverse(g).ok_or_else(degenerate)
    }

    pub fn christoffel_at(&self, p: &[f64]) -> Result<ChristoffelEval, MetricError> {
        Ok(ChristoffelEval {
            point: p.to_vec(),
            gamma: self.christoffel(p)?,
        })
    }

    /// `Xᵀ g(p) Y`.
    pub fn inner(&self, p: &[f64], x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
        for v in [x, y] {
            self.check_point_len(v.len())?;
        }
        let g = self.metric_at(p)?;
        Ok(linalg::bilinear(&g, x, y))
    }
}

fn check_dim(n: usize) -> Result<(), MetricError> {
    if !(2..=4).contains(&n) {
        return Err(MetricError::BadDimension(n));
    }
    Ok(())
}

/// Evaluates `f(u)` and its Jacobian `∂f^a/∂u^i` (rows indexed by `a`).
pub(crate) fn map_and_jacobian<S: Scalar>(
    map: &[Expr],
    u: &[S],
) -> Result<(Vec<S>, Mat<S>), EvalError> {
    let m = u.len();
    let mut f = Vec::with_capacity(map.len());
    let mut jac = linalg::zeros::<S>(map.len(), m);
    for i in 0..m {
        let us: Vec<Jet<S>> = u
            .iter()
            .enumerate()
            .map(|(l, v)| {
                if l == i {
                    Jet::variable(v.clone(), 1)
                } else {
                    Jet::constant(v.clone())
                }
            })
            .collect();
        let env = Env::with_u(us);
        for (a, e) in map.iter().enumerate() {
            let j = e.eval(&env)?;
            if i == 0 {
                f.push(j.coeff(0));
            }
            jac[a][i] = j.coeff(1);
        }
    }
    if m == 0 {
        let env = Env::with_u(Vec::<S>::new());
        for e in map {
            f.push(e.eval(&env)?);
        }
    }
    Ok((f, jac))
}

/// `Jᵀ G J`.
pub(crate) fn pull_back<S: Scalar>(ga: &Mat<S>, jac: &Mat<S>) -> Mat<S> {
    let n = ga.len();
    let m = jac.first().map_or(0, Vec::len);
    let mut g = linalg::zeros::<S>(m, m);
    for i in 0..m {
        for j in i..m {
            let mut acc = S::zero();
            for a in 0..n {
                for b in 0..n {
                    acc = acc + ga[a][b].clone() * jac[a][i].clone() * jac[b][j].clone();
                }
            }
            g[j][i] = acc.clone();
            g[i][j] = acc;
        }
    }
    g
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CovariantError {
    #[error("jet order {have} is too low; at least {need} required")]
    InsufficientOrder { have: usize, need: usize },
    #[error("curve left the chart: {0}")]
    ChartExit(#[source] MetricError),
    #[error("vector has {got} components, metric dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Differential data along a curve at one parameter value: the metric and
/// Christoffel symbols as Taylor series in `t`.
pub struct AlongCurve<'m> {
    metric: &'m MetricField,
    velocity: Vec<Jet>,
    g: Mat<Jet>,
    gamma: Option<ChristoffelSymbols<Jet>>,
    order: usize,
}

impl fmt::Debug for AlongCurve<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlongCurve")
            .field("order", &self.order)
            .field("velocity", &self.velocity)
            .finish()
    }
}

impl<'m> AlongCurve<'m> {
    /// `position` holds one jet per coordinate, all of the same order `K ≥ 1`.
    pub fn new(metric: &'m MetricField, position: &[Jet]) -> Result<Self, CovariantError> {
        if position.len() != metric.dim() {
            return Err(CovariantError::DimensionMismatch {
                expected: metric.dim(),
                got: position.len(),
            });
        }
        let order = position.iter().map(Jet::order).min().unwrap_or(0);
        if order < 1 {
            return Err(CovariantError::InsufficientOrder {
                have: order,
                need: 1,
            });
        }
        let velocity = position.iter().map(|p| p.differentiate()).collect();
        let g = metric
            .components(position)
            .map_err(CovariantError::ChartExit)?;
        let gamma = if metric.is_constant() {
            let gv = linalg::mat_values(&g);
            if linalg::det(&gv).abs() <= DEGENERACY_TOL {
                return Err(CovariantError::ChartExit(MetricError::Degenerate {
                    point: position.iter().map(Scalar::value).collect(),
                    det: linalg::det(&gv),
                }));
            }
            None
        } else {
            Some(
                metric
                    .christoffel(position)
                    .map_err(CovariantError::ChartExit)?,
            )
        };
        Ok(AlongCurve {
            metric,
            velocity,
            g,
            gamma,
            order,
        })
    }

    pub fn metric(&self) -> &MetricField {
        self.metric
    }

    /// Order of the position jets.
    pub fn order(&self) -> usize {
        self.order
    }

    /// `ζ = dγ/dt` as jets of order `K - 1`.
    pub fn velocity(&self) -> &[Jet] {
        &self.velocity
    }

    /// The metric along the curve.
    pub fn metric_jets(&self) -> &Mat<Jet> {
        &self.g
    }

    /// `∇_ζ V` with components `dVᵏ/dt + Γᵏᵢⱼ ζⁱ Vʲ`. The result has one order
    /// less than `v`.
    pub fn nabla(&self, v: &[Jet]) -> Result<Vec<Jet>, CovariantError> {
        if v.len() != self.velocity.len() {
            return Err(CovariantError::DimensionMismatch {
                expected: self.velocity.len(),
                got: v.len(),
            });
        }
        let have = v.iter().map(Jet::order).min().unwrap_or(0);
        if have < 1 {
            return Err(CovariantError::InsufficientOrder { have, need: 1 });
        }
        if have > self.order {
            return Err(CovariantError::InsufficientOrder {
                have: self.order,
                need: have,
            });
        }
        let out_order = have - 1;
        let mut out: Vec<Jet> = v
            .iter()
            .map(|c| c.differentiate().truncate(out_order))
            .collect();
        if let Some(gamma) = &self.gamma {
            let zeta: Vec<Jet> = self
                .velocity
                .iter()
                .map(|z| z.truncate(out_order))
                .collect();
            let vt: Vec<Jet> = v.iter().map(|c| c.truncate(out_order)).collect();
            let corr = gamma.contract(&zeta, &vt);
            for (o, c) in out.iter_mut().zip(corr) {
                *o = (o.clone() + c).truncate(out_order);
            }
        }
        Ok(out)
    }

    /// `g(a, b)` along the curve.
    pub fn inner(&self, a: &[Jet], b: &[Jet]) -> Jet {
        linalg::bilinear(&self.g, a, b)
    }

    /// `g(a, b)` at the expansion point only.
    pub fn inner_value(&self, a: &[f64], b: &[f64]) -> f64 {
        let g = linalg::mat_values(&self.g);
        linalg::bilinear(&g, a, b)
    }
}

/// One covariant derivative `∇_ζ V` along a curve given as jets.
pub fn covariant_along(
    metric: &MetricField,
    curve: &[Jet],
    field: &[Jet],
) -> Result<Vec<Jet>, CovariantError> {
    AlongCurve::new(metric, curve)?.nabla(field)
}

/// Jets of `x ↦ x(t)` from parsed component expressions.
pub fn curve_jets(components: &[Expr], t: f64, order: usize) -> Result<Vec<Jet>, EvalError> {
    let env = Env::with_t(Jet::variable(t, order));
    components
        .iter()
        .map(|c| crate::exprparse::eval_jet(c, &env, order))
        .collect()
}

/// Leading values of a jet vector.
pub fn jet_values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Scalar::value).collect()
}
