//! Spec documents, subcommand dispatch and JSON reports for the `nullframe`
//! binary.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::exprparse::{parse_in, Var};
use crate::helix::{
    self, constancy_report, metric_identity_suite, synthesize, HelixError, HelixSpec, HelixTrace,
    SynthConfig,
};
use crate::linalg;
use crate::nullframe::{gram_deviation, NullCurve, ScreenPolicy, FRAME_TOL};
use crate::semimetric::MetricField;
use crate::submanifold::{self, helix_transfer, null_triad, umbilical_diagnostic, Immersion};

pub const FORMAT_VERSION: u32 = 1;
/// Default tolerance on Frenet residuals.
pub const FRAME_RESIDUAL_TOL: f64 = 1e-9;
/// Default tolerance for identities evaluated on closed-form curves.
pub const ANALYTIC_TOL: f64 = 1e-7;
/// Default tolerance for identities evaluated on integrated traces.
pub const INTEGRATED_TOL: f64 = 1e-6;
/// Default quadrature step for tangent-mode curves.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Default number of samples on a curve.
pub const DEFAULT_CURVE_SAMPLES: usize = 50;
/// Target spacing of trace samples when no sample count is given.
pub const TRACE_SPACING: f64 = 0.02;
/// Steps between re-projections when projection is on.
pub const DEFAULT_PROJECT_EVERY: usize = 10;

#[derive(Parser, Debug)]
#[command(
    name = "nullframe",
    version,
    about = "Null Frenet frames, null helices and submanifold forms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Frame field, curvatures and Frenet residuals along a null curve.
    Frame(Flags),
    /// Integrate a helix and run the identity suite on the trace.
    Synth(Flags),
    /// Cubic and metric identity suites on a curve or helix.
    Verify(Flags),
    /// Forms, residuals and diagnostics of an immersion at sample points.
    Submanifold(Flags),
    /// Push a helix through an immersion and measure its ambient curvatures.
    Transfer(Flags),
}

impl Command {
    pub fn flags(&self) -> &Flags {
        match self {
            Command::Frame(f)
            | Command::Synth(f)
            | Command::Verify(f)
            | Command::Submanifold(f)
            | Command::Transfer(f) => f,
        }
    }

    pub fn from_name(name: &str, flags: Flags) -> Option<Command> {
        Some(match name {
            "frame" => Command::Frame(flags),
            "synth" => Command::Synth(flags),
            "verify" => Command::Verify(flags),
            "submanifold" => Command::Submanifold(flags),
            "transfer" => Command::Transfer(flags),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Frame(_) => "frame",
            Command::Synth(_) => "synth",
            Command::Verify(_) => "verify",
            Command::Submanifold(_) => "submanifold",
            Command::Transfer(_) => "transfer",
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct Flags {
    /// Spec document (JSON).
    #[arg(long, value_name = "FILE")]
    pub spec: PathBuf,
    /// Residual tolerance for the pass/fail verdict.
    #[arg(long, value_name = "R")]
    pub tol: Option<f64>,
    /// Integration step, overriding any step in the document.
    #[arg(long, value_name = "R")]
    pub step: Option<f64>,
    /// Number of samples on the domain.
    #[arg(long, value_name = "N")]
    pub samples: Option<usize>,
    /// Re-project the integrated frame periodically.
    #[arg(long)]
    pub project: bool,
    /// Screen seed order.
    #[arg(long = "seed-order", value_name = "e3,e1,e2")]
    pub seed_order: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Write the trace as CSV.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

/// A failure before a report could be produced.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or an invalid spec document; exit code 2.
    Spec(String),
    /// A numerical limit was exceeded during the run; exit code 1.
    Residual(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Spec(m) | CliError::Residual(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) => 2,
            CliError::Residual(_) => 1,
        }
    }
}

fn spec_err(field: &str, e: impl fmt::Display) -> CliError {
    CliError::Spec(format!("{field}: {e}"))
}

impl From<HelixError> for CliError {
    fn from(e: HelixError) -> Self {
        match e {
            HelixError::Drift { .. } => CliError::Residual(e.to_string()),
            _ => CliError::Spec(e.to_string()),
        }
    }
}

// ---- spec documents ----

#[derive(Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub tol: Option<f64>,
    pub step: Option<f64>,
    pub samples: Option<usize>,
    pub project: Option<bool>,
    pub project_every: Option<usize>,
    pub seed_order: Option<String>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct MetricWrapper {
    dim: usize,
    metric: Value,
}

#[derive(Deserialize, Debug)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum MetricBody {
    Diag { signs: Vec<f64> },
    Field { entries: Vec<Vec<String>> },
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct CurveBody {
    mode: String,
    components: Vec<String>,
    initial: Option<Vec<f64>>,
    domain: [f64; 2],
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct CurveDoc {
    metric: Value,
    curve: CurveBody,
    config: Option<Config>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct FrameBody {
    zeta: Vec<f64>,
    n: Vec<f64>,
    w: Vec<f64>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct HelixBody {
    h: f64,
    k1: f64,
    k2: f64,
    initial_point: Vec<f64>,
    initial_frame: FrameBody,
    domain: [f64; 2],
    step: f64,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct HelixDoc {
    metric: Value,
    helix: HelixBody,
    config: Option<Config>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ImmersionDoc {
    intrinsic_dim: usize,
    ambient: Value,
    map: Vec<String>,
    points: Option<Vec<Vec<f64>>>,
    config: Option<Config>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct TransferDoc {
    immersion: ImmersionDoc,
    helix: HelixBody,
    config: Option<Config>,
}

/// What a spec document describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Curve,
    Helix,
    Immersion,
    Transfer,
}

impl fmt::Display for SpecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpecKind::Curve => "curve",
            SpecKind::Helix => "helix",
            SpecKind::Immersion => "immersion",
            SpecKind::Transfer => "transfer",
        })
    }
}

#[derive(Clone, Debug)]
pub enum Payload {
    Curve(NullCurve),
    Helix(HelixSpec),
    Immersion {
        immersion: Immersion,
        points: Vec<Vec<f64>>,
    },
    Transfer {
        immersion: Immersion,
        helix: HelixSpec,
    },
}

/// A validated spec document.
#[derive(Clone, Debug)]
pub struct SpecDocument {
    pub kind: SpecKind,
    /// Hex SHA-256 of the document bytes.
    pub sha256: String,
    pub config: Config,
    pub payload: Payload,
}

/// Reads and validates a spec document.
pub fn load_spec(path: &Path) -> Result<SpecDocument, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Spec(format!("cannot read {}: {e}", path.display())))?;
    parse_spec(&bytes)
}

/// Validates a spec document held in memory. `step` overrides the
/// integration step of the document before validation.
pub fn parse_spec(bytes: &[u8]) -> Result<SpecDocument, CliError> {
    parse_spec_with(bytes, None)
}

fn parse_spec_with(bytes: &[u8], step: Option<f64>) -> Result<SpecDocument, CliError> {
    let sha256 = format!("{:x}", Sha256::digest(bytes));
    let value: Value =
        serde_json::from_slice(bytes).map_err(|e| CliError::Spec(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::Spec("spec document must be a JSON object".into()))?;
    let kind = if obj.contains_key("immersion") {
        SpecKind::Transfer
    } else if obj.contains_key("intrinsic_dim") {
        SpecKind::Immersion
    } else if obj.contains_key("helix") {
        SpecKind::Helix
    } else if obj.contains_key("curve") {
        SpecKind::Curve
    } else {
        return Err(CliError::Spec(
            "spec document needs one of the keys curve, helix, intrinsic_dim, immersion".into(),
        ));
    };
    let schema = |e: serde_json::Error| CliError::Spec(format!("{kind} spec: {e}"));
    let (config, payload) = match kind {
        SpecKind::Curve => {
            let doc: CurveDoc = serde_json::from_value(value).map_err(schema)?;
            let config = doc.config.unwrap_or_default();
            let step = step.or(config.step).unwrap_or(DEFAULT_STEP);
            let metric = metric_from_json(&doc.metric, "metric")?;
            (
                config,
                Payload::Curve(build_curve(metric, doc.curve, step)?),
            )
        }
        SpecKind::Helix => {
            let doc: HelixDoc = serde_json::from_value(value).map_err(schema)?;
            let metric = metric_from_json(&doc.metric, "metric")?;
            let config = doc.config.unwrap_or_default();
            let spec = build_helix(metric, doc.helix, step.or(config.step))?;
            (config, Payload::Helix(spec))
        }
        SpecKind::Immersion => {
            let doc: ImmersionDoc = serde_json::from_value(value).map_err(schema)?;
            let config = doc.config.clone().unwrap_or_default();
            let (immersion, points) = build_immersion(doc, "")?;
            (config, Payload::Immersion { immersion, points })
        }
        SpecKind::Transfer => {
            let doc: TransferDoc = serde_json::from_value(value).map_err(schema)?;
            let config = doc.config.unwrap_or_default();
            if doc.immersion.config.is_some() {
                return Err(CliError::Spec(
                    "immersion.config: put config at the top level of a transfer spec".into(),
                ));
            }
            let (immersion, _) = build_immersion(doc.immersion, "immersion.")?;
            if immersion.intrinsic_dim() != 3 {
                return Err(CliError::Spec(format!(
                    "immersion.intrinsic_dim: a transfer needs a 3-dimensional submanifold, got {}",
                    immersion.intrinsic_dim()
                )));
            }
            let helix = build_helix(
                immersion.induced_metric_field(),
                doc.helix,
                step.or(config.step),
            )?;
            (config, Payload::Transfer { immersion, helix })
        }
    };
    if let Some(s) = &config.seed_order {
        s.parse::<ScreenPolicy>()
            .map_err(|e| spec_err("config.seed_order", e))?;
    }
    check_tol(config.tol, "config.tol")?;
    Ok(SpecDocument {
        kind,
        sha256,
        config,
        payload,
    })
}

fn check_tol(tol: Option<f64>, field: &str) -> Result<(), CliError> {
    match tol {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(spec_err(
            field,
            format!("tolerance must be positive, got {t}"),
        )),
        _ => Ok(()),
    }
}

/// Metric from either `{"type": ...}` or `{"dim": n, "metric": {"type": ...}}`.
pub fn metric_from_json(value: &Value, field: &str) -> Result<MetricField, CliError> {
    let (dim, body) = if value.get("type").is_none() && value.get("metric").is_some() {
        let w: MetricWrapper =
            serde_json::from_value(value.clone()).map_err(|e| spec_err(field, e))?;
        (Some(w.dim), w.metric)
    } else {
        (None, value.clone())
    };
    let body: MetricBody = serde_json::from_value(body).map_err(|e| spec_err(field, e))?;
    let metric = match body {
        MetricBody::Diag { signs } => MetricField::diag(&signs),
        MetricBody::Field { entries } => MetricField::from_entries(&entries),
    }
    .map_err(|e| spec_err(field, e))?;
    if let Some(d) = dim {
        if d != metric.dim() {
            return Err(spec_err(
                field,
                format!("dim is {d} but the metric has dimension {}", metric.dim()),
            ));
        }
    }
    Ok(metric)
}

fn build_curve(metric: MetricField, c: CurveBody, step: f64) -> Result<NullCurve, CliError> {
    let vars = [Var::T];
    let comps = c
        .components
        .iter()
        .enumerate()
        .map(|(i, s)| {
            parse_in(s, &vars).map_err(|e| spec_err(&format!("curve.components[{i}]"), e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let domain = (c.domain[0], c.domain[1]);
    let res = match c.mode.as_str() {
        "position" => {
            if c.initial.is_some() {
                return Err(spec_err("curve.initial", "only allowed in tangent mode"));
            }
            NullCurve::position(metric, comps, domain)
        }
        "tangent" => {
            let initial = c
                .initial
                .ok_or_else(|| spec_err("curve.initial", "required in tangent mode"))?;
            NullCurve::tangent(metric, comps, initial, domain, step)
        }
        other => {
            return Err(spec_err(
                "curve.mode",
                format!("expected \"position\" or \"tangent\", got \"{other}\""),
            ))
        }
    };
    res.map_err(|e| spec_err("curve", e))
}

fn build_helix(
    metric: MetricField,
    h: HelixBody,
    step: Option<f64>,
) -> Result<HelixSpec, CliError> {
    let spec = HelixSpec {
        metric,
        h: h.h,
        k1: h.k1,
        k2: h.k2,
        initial_point: h.initial_point,
        zeta: h.initial_frame.zeta,
        n: h.initial_frame.n,
        w: h.initial_frame.w,
        domain: (h.domain[0], h.domain[1]),
        step: step.unwrap_or(h.step),
    };
    spec.validate().map_err(|e| spec_err("helix", e))?;
    Ok(spec)
}

fn build_immersion(
    doc: ImmersionDoc,
    prefix: &str,
) -> Result<(Immersion, Vec<Vec<f64>>), CliError> {
    let ambient = metric_from_json(&doc.ambient, &format!("{prefix}ambient"))?;
    let immersion = Immersion::parse(doc.intrinsic_dim, &doc.map, ambient)
        .map_err(|e| spec_err(&format!("{prefix}map"), e))?;
    let points = doc
        .points
        .unwrap_or_else(|| vec![vec![0.0; doc.intrinsic_dim]]);
    if points.is_empty() {
        return Err(spec_err(
            &format!("{prefix}points"),
            "needs at least one point",
        ));
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != doc.intrinsic_dim {
            return Err(spec_err(
                &format!("{prefix}points[{i}]"),
                format!(
                    "expected {} coordinates, got {}",
                    doc.intrinsic_dim,
                    p.len()
                ),
            ));
        }
    }
    Ok((immersion, points))
}

// ---- reports ----

/// One pass/fail line of a report summary.
#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    fn le(name: &str, value: f64, tol: f64) -> Check {
        Check {
            name: name.into(),
            value,
            tol,
            pass: value <= tol,
        }
    }
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tol: f64,
    pub step: Option<f64>,
    pub samples: Option<usize>,
    pub project_every: Option<usize>,
    pub seed_order: String,
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct Summary {
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Further summary values, keyed by name.
    pub values: BTreeMap<String, Value>,
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct Report {
    pub format_version: u32,
    pub command: String,
    pub spec_kind: SpecKind,
    pub spec_sha256: String,
    pub config: RunConfig,
    pub rows: Vec<Value>,
    pub summary: Summary,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn summary(checks: Vec<Check>, values: BTreeMap<String, Value>) -> Summary {
    Summary {
        pass: checks.iter().all(|c| c.pass),
        checks,
        values,
    }
}

fn row<T: Serialize>(r: T) -> Value {
    serde_json::to_value(r).expect("row serializes")
}

#[derive(Serialize)]
struct FrameRow {
    t: f64,
    point: Vec<f64>,
    zeta: Vec<f64>,
    n: Vec<f64>,
    w: Vec<f64>,
    seed: String,
    h: f64,
    k1: f64,
    k2: f64,
    gram_deviation: f64,
    frenet_residuals: [f64; 3],
}

#[derive(Serialize)]
struct IdentityRow {
    t: f64,
    h: f64,
    k1: f64,
    k2: f64,
    cubic_residual: f64,
    scalars: [f64; 4],
    targets: [f64; 4],
    max_identity_deviation: f64,
    premultiplier: f64,
}

#[derive(Serialize)]
struct TraceRow {
    t: f64,
    point: Vec<f64>,
    gram_drift: f64,
    error_estimate: f64,
    h: f64,
    k1: f64,
    k2: f64,
    cubic_residual: f64,
    max_identity_deviation: f64,
}

#[derive(Serialize)]
struct Curvatures {
    h: f64,
    k1: f64,
    k2: Option<f64>,
}

#[derive(Serialize)]
struct TransferRowOut {
    t: f64,
    u: Vec<f64>,
    x: Vec<f64>,
    intrinsic: Curvatures,
    ambient: Curvatures,
    screen: &'static str,
    geodesic_residual: f64,
}

#[derive(Serialize)]
struct Diagnostic {
    d1: Vec<f64>,
    d2: Vec<f64>,
    d1_minus_h: f64,
    d2_norm: f64,
}

#[derive(Serialize)]
struct SubmanifoldRow {
    u: Vec<f64>,
    x: Vec<f64>,
    induced_metric: Vec<Vec<f64>>,
    normals: Vec<Vec<f64>>,
    normal_signs: Vec<f64>,
    second_fundamental: Vec<Vec<Vec<f64>>>,
    shape_operators: Vec<Vec<Vec<f64>>>,
    mean_curvature: Vec<f64>,
    umbilical_residual: f64,
    geodesic_residual: f64,
    parallel_h_residual: f64,
    max_nabla_b: f64,
    symmetry_residual: f64,
    duality_residual: f64,
    totally_umbilical: bool,
    totally_geodesic: bool,
    umbilical_diagnostic: Option<Diagnostic>,
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn num(v: f64) -> Value {
    serde_json::json!(v)
}

struct Ctx<'a> {
    command: &'static str,
    doc: &'a SpecDocument,
    tol: f64,
    samples: Option<usize>,
    project_every: Option<usize>,
    policy: ScreenPolicy,
    csv: Option<&'a Path>,
}

impl Ctx<'_> {
    fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            project_every: self.project_every,
            ..SynthConfig::default()
        }
    }

    fn trace_samples(&self, domain: (f64, f64)) -> usize {
        self.samples
            .unwrap_or_else(|| ((domain.1 - domain.0) / TRACE_SPACING).round() as usize + 1)
    }

    fn step(&self) -> Option<f64> {
        match &self.doc.payload {
            Payload::Curve(c) if c.mode() == crate::nullframe::CurveMode::Tangent => Some(c.step()),
            Payload::Helix(h) | Payload::Transfer { helix: h, .. } => Some(h.step),
            _ => None,
        }
    }

    fn report(&self, rows: Vec<Value>, summary: Summary) -> Report {
        Report {
            format_version: FORMAT_VERSION,
            command: self.command.into(),
            spec_kind: self.doc.kind,
            spec_sha256: self.doc.sha256.clone(),
            config: RunConfig {
                tol: self.tol,
                step: self.step(),
                samples: self.samples,
                project_every: self.project_every,
                seed_order: self.policy.to_string(),
            },
            rows,
            summary,
        }
    }

    fn wrong_kind(&self, expected: &str) -> CliError {
        CliError::Spec(format!(
            "`{}` needs a {expected} spec, got spec kind `{}`",
            self.command, self.doc.kind
        ))
    }
}

fn curve_err(e: impl fmt::Display) -> CliError {
    CliError::Spec(e.to_string())
}

fn run_frame(ctx: &Ctx, curve: &NullCurve) -> Result<Report, CliError> {
    let grid = curve.uniform_grid(ctx.samples.unwrap_or(DEFAULT_CURVE_SAMPLES));
    let frames = curve.frame_field(&grid, &ctx.policy).map_err(curve_err)?;
    let mut rows = Vec::with_capacity(frames.len());
    let (mut gram, mut res) = (0.0f64, 0.0f64);
    for f in &frames {
        let g = curve.metric().metric_at(&f.point).map_err(curve_err)?;
        let dev = gram_deviation(&g, &f.zeta, &f.n, &f.w);
        let k = curve.curvatures_at(f).map_err(curve_err)?;
        let r = curve.frenet_residuals(f, &k).map_err(curve_err)?.norms();
        gram = gram.max(dev);
        res = res.max(max_of(r));
        let axis = f.seed.iter().position(|&c| c != 0.0).unwrap_or(0);
        rows.push(row(FrameRow {
            t: f.t,
            point: f.point.clone(),
            zeta: f.zeta.clone(),
            n: f.n.clone(),
            w: f.w.clone(),
            seed: format!("e{}", axis + 1),
            h: k.h,
            k1: k.k1,
            k2: k.k2,
            gram_deviation: dev,
            frenet_residuals: r,
        }));
    }
    let checks = vec![
        Check::le("gram_deviation", gram, FRAME_TOL),
        Check::le("frenet_residual", res, ctx.tol),
    ];
    Ok(ctx.report(rows, summary(checks, BTreeMap::new())))
}

fn verify_curve(ctx: &Ctx, curve: &NullCurve) -> Result<Report, CliError> {
    let grid = curve.uniform_grid(ctx.samples.unwrap_or(DEFAULT_CURVE_SAMPLES));
    let frames = curve.frame_field(&grid, &ctx.policy).map_err(curve_err)?;
    let mut rows = Vec::with_capacity(frames.len());
    let mut ks = Vec::with_capacity(frames.len());
    let (mut cubic, mut ident) = (0.0f64, 0.0f64);
    for f in &frames {
        let fj = curve.local_jets(f).map_err(curve_err)?;
        let k = fj.curvatures();
        let rep = metric_identity_suite(&fj, &k).map_err(curve_err)?;
        cubic = cubic.max(rep.cubic_residual);
        ident = ident.max(rep.max_deviation());
        ks.push(k);
        rows.push(row(IdentityRow {
            t: f.t,
            h: k.h,
            k1: k.k1,
            k2: k.k2,
            cubic_residual: rep.cubic_residual,
            scalars: rep.scalars,
            targets: rep.targets,
            max_identity_deviation: rep.max_deviation(),
            premultiplier: rep.premultiplier,
        }));
    }
    let constancy = constancy_report(&ks)?;
    let mut values = BTreeMap::new();
    values.insert("constancy_h".into(), num(constancy.h));
    values.insert("constancy_k1".into(), num(constancy.k1));
    values.insert("constancy_k2".into(), num(constancy.k2));
    let checks = vec![
        Check::le("cubic_residual", cubic, ctx.tol),
        Check::le("metric_identity_deviation", ident, ctx.tol),
    ];
    Ok(ctx.report(rows, summary(checks, values)))
}

fn write_csv(path: &Path, trace: &HelixTrace) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Spec(format!("cannot write {}: {e}", path.display())))?;
    trace
        .write_csv(std::io::BufWriter::new(file))
        .map_err(|e| CliError::Spec(format!("cannot write {}: {e}", path.display())))
}

fn run_synth(ctx: &Ctx, spec: &HelixSpec) -> Result<Report, CliError> {
    let grid = helix::trace_grid(spec, ctx.trace_samples(spec.domain));
    let trace = synthesize(spec, &grid, &ctx.synth_config())?;
    let samples = trace.curvature_samples()?;
    let reports = trace.identity_reports()?;
    let c = trace.constants;
    let mut rows = Vec::with_capacity(trace.len());
    let (mut round, mut cubic, mut ident) = (0.0f64, 0.0f64, 0.0f64);
    for ((s, k), rep) in trace.samples.iter().zip(&samples).zip(&reports) {
        round = round.max(
            (k.h - c.h)
                .abs()
                .max((k.k1 - c.k1).abs())
                .max((k.k2 - c.k2).abs()),
        );
        cubic = cubic.max(rep.cubic_residual);
        ident = ident.max(rep.max_deviation());
        rows.push(row(TraceRow {
            t: s.t,
            point: s.point.clone(),
            gram_drift: s.gram_drift,
            error_estimate: s.error_estimate,
            h: k.h,
            k1: k.k1,
            k2: k.k2,
            cubic_residual: rep.cubic_residual,
            max_identity_deviation: rep.max_deviation(),
        }));
    }
    if let Some(path) = ctx.csv {
        write_csv(path, &trace)?;
    }
    let mut values = BTreeMap::new();
    values.insert("max_cubic_residual".into(), num(cubic));
    values.insert("max_error_estimate".into(), num(trace.max_error_estimate()));
    values.insert("max_gram_drift".into(), num(trace.max_gram_drift()));
    let checks = vec![
        Check::le("round_trip_deviation", round, ctx.tol),
        Check::le("metric_identity_deviation", ident, ctx.tol),
    ];
    Ok(ctx.report(rows, summary(checks, values)))
}

fn run_submanifold(ctx: &Ctx, imm: &Immersion, points: &[Vec<f64>]) -> Result<Report, CliError> {
    let m = imm.intrinsic_dim();
    let err = |e: submanifold::SubmanifoldError| CliError::Spec(e.to_string());
    let basis: Vec<Vec<f64>> = linalg::identity(m);
    let mut rows = Vec::with_capacity(points.len());
    let (mut sym, mut dual, mut diag_worst) = (0.0f64, 0.0f64, 0.0f64);
    let mut any_diag = false;
    for u in points {
        let forms = imm.forms(u).map_err(err)?;
        let mut s = 0.0f64;
        let mut d = 0.0f64;
        let mut nb = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                s = s.max(linalg::norm(&linalg::sub(&forms.b[i][j], &forms.b[j][i])));
                for a in 0..imm.codim() {
                    d = d.max(
                        imm.duality_residual(u, &basis[i], &basis[j], a)
                            .map_err(err)?,
                    );
                }
                for k in 0..m {
                    let v = imm
                        .nabla_b(u, &basis[i], &basis[j], &basis[k])
                        .map_err(err)?;
                    nb = nb.max(linalg::norm(&v));
                }
            }
        }
        let mut par = 0.0f64;
        for e in &basis {
            par = par.max(imm.parallel_h_residual(u, e).map_err(err)?);
        }
        let umb = imm.umbilical_residual(u).map_err(err)?;
        let geo = imm.geodesic_residual(u).map_err(err)?;
        let g = imm.induced_metric(u).map_err(err)?;
        let diagnostic = if m == 3 && linalg::negative_index(&g) == 2 {
            let [xi, xj, xk] = null_triad(imm, u).map_err(err)?;
            let (d1, d2) = umbilical_diagnostic(imm, u, &xi, &xj, &xk).map_err(err)?;
            let dh = linalg::norm(&linalg::sub(&d1, &forms.mean_curvature));
            let dn = linalg::norm(&d2);
            if umb <= ctx.tol {
                any_diag = true;
                diag_worst = diag_worst.max(dh).max(dn);
            }
            Some(Diagnostic {
                d1,
                d2,
                d1_minus_h: dh,
                d2_norm: dn,
            })
        } else {
            None
        };
        sym = sym.max(s);
        dual = dual.max(d);
        rows.push(row(SubmanifoldRow {
            u: u.clone(),
            x: imm.point(u).map_err(err)?,
            induced_metric: g,
            normals: forms.normals.vectors.clone(),
            normal_signs: forms.normals.signs.clone(),
            second_fundamental: forms.b.clone(),
            shape_operators: forms.shape.clone(),
            mean_curvature: forms.mean_curvature.clone(),
            umbilical_residual: umb,
            geodesic_residual: geo,
            parallel_h_residual: par,
            max_nabla_b: nb,
            symmetry_residual: s,
            duality_residual: d,
            totally_umbilical: umb <= ctx.tol,
            totally_geodesic: geo <= ctx.tol,
            umbilical_diagnostic: diagnostic,
        }));
    }
    let mut checks = vec![
        Check::le("b_symmetry", sym, ctx.tol),
        Check::le("duality_residual", dual, ctx.tol),
    ];
    if any_diag {
        checks.push(Check::le("umbilical_diagnostic", diag_worst, ctx.tol));
    }
    Ok(ctx.report(rows, summary(checks, BTreeMap::new())))
}

fn run_transfer(ctx: &Ctx, imm: &Immersion, spec: &HelixSpec) -> Result<Report, CliError> {
    let grid = helix::trace_grid(spec, ctx.trace_samples(spec.domain));
    let rep = helix_transfer(imm, spec, &grid, &ctx.synth_config()).map_err(|e| match e {
        submanifold::SubmanifoldError::Helix(h) => CliError::from(h),
        e => CliError::Spec(e.to_string()),
    })?;
    let rows = rep
        .rows
        .iter()
        .map(|r| {
            row(TransferRowOut {
                t: r.t,
                u: r.u.clone(),
                x: r.x.clone(),
                intrinsic: Curvatures {
                    h: r.intrinsic.h,
                    k1: r.intrinsic.k1,
                    k2: Some(r.intrinsic.k2),
                },
                ambient: Curvatures {
                    h: r.h,
                    k1: r.k1,
                    k2: r.k2,
                },
                screen: match r.screen {
                    submanifold::ScreenKind::Timelike => "timelike",
                    submanifold::ScreenKind::Spacelike => "spacelike",
                    submanifold::ScreenKind::Null => "null",
                },
                geodesic_residual: r.geodesic_residual,
            })
        })
        .collect();
    let mut values = BTreeMap::new();
    values.insert("ambient_constancy_h".into(), num(rep.constancy.h));
    values.insert("ambient_constancy_k1".into(), num(rep.constancy.k1));
    values.insert("ambient_constancy_k2".into(), num(rep.constancy.k2));
    values.insert("k2_undefined".into(), serde_json::json!(rep.k2_undefined));
    values.insert(
        "max_geodesic_residual".into(),
        num(rep.max_geodesic_residual),
    );
    values.insert(
        "min_geodesic_residual".into(),
        num(rep.min_geodesic_residual),
    );
    let checks = vec![
        Check::le(
            "intrinsic_constancy",
            rep.intrinsic_constancy.max(),
            ctx.tol,
        ),
        Check::le("ambient_constancy", rep.constancy.max(), ctx.tol),
    ];
    Ok(ctx.report(rows, summary(checks, values)))
}

/// Runs one parsed command and returns its report.
pub fn execute(command: &Command) -> Result<Report, CliError> {
    let path = &command.flags().spec;
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Spec(format!("cannot read {}: {e}", path.display())))?;
    execute_bytes(command, &bytes)
}

/// [`execute`] on an in-memory spec document; `flags.spec` is ignored.
pub fn execute_bytes(command: &Command, bytes: &[u8]) -> Result<Report, CliError> {
    let flags = command.flags();
    check_tol(flags.tol, "--tol")?;
    if let Some(s) = flags.step {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::Spec(format!(
                "--step: step must be positive, got {s}"
            )));
        }
    }
    if let Some(n) = flags.samples {
        if n < 2 {
            return Err(CliError::Spec(format!(
                "--samples: need at least 2, got {n}"
            )));
        }
    }
    let doc = parse_spec_with(bytes, flags.step)?;
    let seed = flags
        .seed_order
        .clone()
        .or_else(|| doc.config.seed_order.clone());
    let policy = match seed {
        Some(s) => s.parse().map_err(|e| spec_err("--seed-order", e))?,
        None => ScreenPolicy::default(),
    };
    let project = flags.project || doc.config.project.unwrap_or(false);
    let project_every = if project {
        Some(
            doc.config
                .project_every
                .unwrap_or(DEFAULT_PROJECT_EVERY)
                .max(1),
        )
    } else {
        None
    };
    let default_tol = match (command, &doc.payload) {
        (Command::Frame(_), _) => FRAME_RESIDUAL_TOL,
        (_, Payload::Curve(_)) | (_, Payload::Immersion { .. }) => ANALYTIC_TOL,
        _ => INTEGRATED_TOL,
    };
    let ctx = Ctx {
        command: command.name(),
        doc: &doc,
        tol: flags.tol.or(doc.config.tol).unwrap_or(default_tol),
        samples: flags.samples.or(doc.config.samples),
        project_every,
        policy,
        csv: flags.csv.as_deref(),
    };
    if ctx.csv.is_some() && !matches!(command, Command::Synth(_)) {
        return Err(CliError::Spec("--csv is only available for synth".into()));
    }
    match (command, &doc.payload) {
        (Command::Frame(_), Payload::Curve(c)) => run_frame(&ctx, c),
        (Command::Frame(_), _) => Err(ctx.wrong_kind("curve")),
        (Command::Verify(_), Payload::Curve(c)) => verify_curve(&ctx, c),
        (Command::Verify(_), Payload::Helix(h)) | (Command::Synth(_), Payload::Helix(h)) => {
            run_synth(&ctx, h)
        }
        (Command::Verify(_), _) => Err(ctx.wrong_kind("curve or helix")),
        (Command::Synth(_), _) => Err(ctx.wrong_kind("helix")),
        (Command::Submanifold(_), Payload::Immersion { immersion, points }) => {
            run_submanifold(&ctx, immersion, points)
        }
        (Command::Submanifold(_), _) => Err(ctx.wrong_kind("immersion")),
        (Command::Transfer(_), Payload::Transfer { immersion, helix }) => {
            run_transfer(&ctx, immersion, helix)
        }
        (Command::Transfer(_), _) => Err(ctx.wrong_kind("transfer")),
    }
}

/// Parses `argv`, runs the command, writes the report and returns the exit
/// code: 0 when every check passes, 1 on a residual failure, 2 on a usage
/// or spec error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let report = match execute(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let text = report.to_json();
    let written = match &cli.command.flags().out {
        Some(path) => std::fs::write(path, &text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return 2;
    }
    for c in report.summary.checks.iter().filter(|c| !c.pass) {
        eprintln!("fail: {} = {:e} exceeds {:e}", c.name, c.value, c.tol);
    }
    if report.summary.pass {
        0
    } else {
        1
    }
}
