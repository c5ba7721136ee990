//! Classification verdicts and the serializable reports behind each CLI command.

use serde::Serialize;
use serde_json::Value;

use crate::averaging::{self, AveragedMetric, ChristoffelDecomposition, Measure, SphereInvariance};
use crate::error::Result;
use crate::expr::probe_directions;
use crate::homotopy::{self, GaugeOptions, InvarianceReport};
use crate::indicatrix::{bao_shen_check, BaoShenCheck, SphereGrid};
use crate::metric::{default_x_samples, FinslerMetric, MetricSpec, ValidationReport};
use crate::tensor::{self, ChernData, Geometry, StructureResiduals, TensorTable, LANDSBERG_SIGN};
use crate::transport::{self, convergence_order, Curve, FrameRule, FrameTransportResult, TransportResult};

/// Version of every report layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_X_PROBES: usize = 3;
pub const DEFAULT_Y_PROBES: usize = 16;
const Y_PROBE_SEED: u64 = 0xc1a55;

/// Tolerance for the decomposition-versus-direct comparison.
pub const DECOMPOSITION_TOLERANCE: f64 = 5e-4;

#[derive(Debug, Clone, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
    pub report_schema: u32,
}

impl Tool {
    pub fn current() -> Self {
        Tool {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            report_schema: REPORT_SCHEMA_VERSION,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Verdict {
    pub holds: bool,
    pub residual: f64,
    pub tolerance: f64,
}

impl Verdict {
    fn new(residual: f64, tolerance: f64) -> Self {
        Verdict {
            holds: residual <= tolerance,
            residual,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeError {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub message: String,
}

/// Verdicts at the probed points only.
#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub x_probes: Vec<Vec<f64>>,
    pub y_probes: usize,
    /// `max |A|` over probes.
    pub max_cartan: f64,
    /// `max |P|` over probes.
    pub max_hv_curvature: f64,
    /// `max |Γ(x, y) − Γ(x, y')|` over probes sharing `x`.
    pub max_chern_y_variation: f64,
    /// `max |Ȧ|` over probes.
    pub max_landsberg: f64,
    pub riemannian: Verdict,
    pub berwald: Verdict,
    /// Berwald verdict from the y-variation of `Γ` instead of `P`.
    pub berwald_by_variation: Verdict,
    pub landsberg: Verdict,
    pub hierarchy_violations: Vec<String>,
    pub errors: Vec<ProbeError>,
}

/// `riemannian ⟺ max|A| ≤ tol`, `berwald ⟺ max|P| ≤ tol`, `landsberg ⟺ max|Ȧ| ≤ tol`.
pub fn classify(metric: &FinslerMetric, xs: &[Vec<f64>], ys: &[Vec<f64>], tolerance: f64) -> Classification {
    let mut max_cartan = 0.0f64;
    let mut max_p = 0.0f64;
    let mut max_var = 0.0f64;
    let mut max_l = 0.0f64;
    let mut errors = Vec::new();
    for x in xs {
        let mut reference: Option<TensorTable> = None;
        for y in ys {
            match Geometry::at(metric, x, y) {
                Ok(geo) => {
                    let data = geo.chern_data();
                    max_cartan = max_cartan.max(data.cartan.max_abs());
                    max_p = max_p.max(geo.hv_curvature().max_abs());
                    max_l = max_l.max(geo.landsberg().max_abs());
                    match &reference {
                        Some(r) => max_var = max_var.max(r.max_diff(&data.chern)),
                        None => reference = Some(data.chern),
                    }
                }
                Err(e) => errors.push(ProbeError {
                    x: x.clone(),
                    y: y.clone(),
                    message: e.to_string(),
                }),
            }
        }
    }
    let riemannian = Verdict::new(max_cartan, tolerance);
    let berwald = Verdict::new(max_p, tolerance);
    let landsberg = Verdict::new(max_l, tolerance);
    let mut hierarchy_violations = Vec::new();
    if riemannian.holds && !berwald.holds {
        hierarchy_violations.push("riemannian holds but berwald fails at this tolerance".to_string());
    }
    if berwald.holds && !landsberg.holds {
        hierarchy_violations.push("berwald holds but landsberg fails at this tolerance".to_string());
    }
    let berwald_by_variation = Verdict::new(max_var, tolerance);
    if berwald_by_variation.holds != berwald.holds {
        hierarchy_violations.push("berwald verdicts from P and from the y-variation of Gamma disagree".to_string());
    }
    Classification {
        x_probes: xs.to_vec(),
        y_probes: ys.len(),
        max_cartan,
        max_hv_curvature: max_p,
        max_chern_y_variation: max_var,
        max_landsberg: max_l,
        riemannian,
        berwald,
        berwald_by_variation,
        landsberg,
        hierarchy_violations,
        errors,
    }
}

/// Default probes: 3 base points and 16 directions.
pub fn default_probes(n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    (
        default_x_samples(n, DEFAULT_X_PROBES),
        probe_directions(n, DEFAULT_Y_PROBES, Y_PROBE_SEED),
    )
}

/// Every tensor at one point.
#[derive(Debug, Clone, Serialize)]
pub struct PointTensors {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(flatten)]
    pub chern: ChernData,
    pub hh_curvature: TensorTable,
    pub hv_curvature: TensorTable,
    pub landsberg: TensorTable,
    pub landsberg_trace: Vec<f64>,
    pub landsberg_sign: f64,
    pub structure_residuals: StructureResiduals,
}

pub fn point_tensors(metric: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<PointTensors> {
    let geo = Geometry::at(metric, x, y)?;
    let chern = geo.chern_data();
    let structure_residuals = tensor::verify_structure_equations(&chern, metric, x, y)?;
    let landsberg = geo.landsberg();
    let (_, upper) = geo.landsberg_trace(&landsberg);
    Ok(PointTensors {
        x: x.to_vec(),
        y: y.to_vec(),
        chern,
        hh_curvature: geo.hh_curvature(),
        hv_curvature: geo.hv_curvature(),
        landsberg,
        landsberg_trace: upper,
        landsberg_sign: LANDSBERG_SIGN,
        structure_residuals,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub tool: Tool,
    pub command: &'static str,
    pub metric: MetricSpec,
    pub tolerance: f64,
    pub validation: ValidationReport,
    pub point: PointTensors,
    pub classification: Classification,
}

pub fn analyze(metric: &FinslerMetric, x: &[f64], y: &[f64], tolerance: f64) -> Result<AnalysisReport> {
    let (xs, ys) = default_probes(metric.dimension());
    Ok(AnalysisReport {
        tool: Tool::current(),
        command: "analyze",
        metric: metric.spec().clone(),
        tolerance,
        validation: metric.validate_default(),
        point: point_tensors(metric, x, y)?,
        classification: classify(metric, &xs, &ys, tolerance),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AverageReport {
    pub tool: Tool,
    pub command: &'static str,
    pub metric: MetricSpec,
    pub grid: SphereGrid,
    pub fd_step: f64,
    pub averaged: AveragedMetric,
    pub direct: TensorTable,
    pub decomposition: ChristoffelDecomposition,
    /// `max |decomposed sum − direct|`.
    pub deviation: f64,
    /// Same with the node-wise volume and log-density terms.
    pub deviation_nodewise: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub sphere_invariance: SphereInvariance,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

pub fn average(metric: &FinslerMetric, measure: &Measure, x: &[f64], grid: &SphereGrid) -> Result<AverageReport> {
    let averaged = averaging::averaged_metric(metric, measure, x, grid)?;
    let direct = averaging::levi_civita_direct(metric, measure, x, grid, averaging::FD_STEP)?;
    let decomposition = averaging::levi_civita_decomposed(metric, measure, x, grid)?;
    let deviation = max_abs_diff(&decomposition.sum, &direct.components);
    let deviation_nodewise = max_abs_diff(&decomposition.sum_nodewise, &direct.components);
    Ok(AverageReport {
        tool: Tool::current(),
        command: "average",
        metric: metric.spec().clone(),
        grid: grid.clone(),
        fd_step: averaging::FD_STEP,
        averaged,
        direct,
        decomposition,
        deviation,
        deviation_nodewise,
        tolerance: DECOMPOSITION_TOLERANCE,
        passed: deviation <= DECOMPOSITION_TOLERANCE,
        sphere_invariance: averaging::sphere_invariance_check(metric, x, &[0.5, 1.0, 2.0], grid)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HomotopyReport {
    pub tool: Tool,
    pub command: &'static str,
    pub metric: MetricSpec,
    pub grid: SphereGrid,
    pub options: GaugeOptions,
    pub relaxation: f64,
    pub invariance: InvarianceReport,
}

pub fn homotopy(
    metric: &FinslerMetric,
    measure: &Measure,
    x: &[f64],
    t_list: &[f64],
    grid: &SphereGrid,
    options: &GaugeOptions,
) -> Result<HomotopyReport> {
    Ok(HomotopyReport {
        tool: Tool::current(),
        command: "homotopy",
        metric: metric.spec().clone(),
        grid: grid.clone(),
        options: *options,
        relaxation: homotopy::relaxation(metric.dimension()),
        invariance: homotopy::invariance_report(metric, measure, x, t_list, grid, options)?,
    })
}

impl HomotopyReport {
    /// `t,iterations,final_update,converged,gauge_min,gauge_max,volume_t,metric_deviation,f_term_drift,volume_spread`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "t,iterations,final_update,converged,gauge_min,gauge_max,volume_t,metric_deviation,f_term_drift,volume_spread\n",
        );
        for r in &self.invariance.rows {
            out.push_str(&format!(
                "{},{},{:e},{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                r.t,
                r.iterations,
                r.final_update,
                r.converged,
                r.gauge_range[0],
                r.gauge_range[1],
                r.volume_t,
                r.metric_deviation,
                r.f_term_drift,
                r.shen.volume_spread
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRun {
    pub steps: Vec<usize>,
    pub norm_drift: Vec<f64>,
    pub fitted_order: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportReport {
    pub tool: Tool,
    pub command: &'static str,
    pub metric: MetricSpec,
    pub curve: Curve,
    pub y0: Vec<f64>,
    pub transport: TransportResult,
    pub norm_drift: f64,
    pub convergence: ConvergenceRun,
    pub frame: FrameTransportResult,
    pub frame_chern: FrameTransportResult,
}

pub fn transport(metric: &FinslerMetric, curve: &Curve, y0: &[f64], steps: usize) -> Result<TransportReport> {
    let result = transport::parallel_transport(metric, curve, y0, steps)?;
    let ladder: Vec<usize> = [4, 2, 1].iter().map(|d| (steps / d).max(1)).collect();
    let mut drifts = Vec::new();
    for &s in &ladder {
        drifts.push(transport::norm_drift(&transport::parallel_transport(metric, curve, y0, s)?));
    }
    let frame = transport::coordinate_frame(metric.dimension());
    Ok(TransportReport {
        tool: Tool::current(),
        command: "transport",
        metric: metric.spec().clone(),
        curve: curve.clone(),
        y0: y0.to_vec(),
        norm_drift: transport::norm_drift(&result),
        transport: result,
        convergence: ConvergenceRun {
            fitted_order: convergence_order(&ladder, &drifts),
            steps: ladder,
            norm_drift: drifts,
        },
        frame: transport::frame_transport_check(metric, curve, y0, &frame, steps, FrameRule::Linearized)?,
        frame_chern: transport::frame_transport_check(metric, curve, y0, &frame, steps, FrameRule::Chern)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BaoShenReport {
    pub tool: Tool,
    pub command: &'static str,
    pub metric: MetricSpec,
    pub grid: SphereGrid,
    pub checks: Vec<BaoShenCheck>,
    pub max_residual: f64,
}

/// Volume-derivative identity along every coordinate direction.
pub fn baoshen(metric: &FinslerMetric, x: &[f64], grid: &SphereGrid, fd_step: f64) -> Result<BaoShenReport> {
    let checks = transport::coordinate_frame(metric.dimension())
        .iter()
        .map(|b| bao_shen_check(metric, x, b, grid, fd_step))
        .collect::<Result<Vec<_>>>()?;
    Ok(BaoShenReport {
        tool: Tool::current(),
        command: "baoshen",
        metric: metric.spec().clone(),
        grid: grid.clone(),
        max_residual: checks.iter().map(|c| c.residual).fold(0.0, f64::max),
        checks,
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// Aligned `path  value` lines for any serialized report.
pub fn render_text(value: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", value, &mut rows);
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        out.push_str(&format!("{k:<width$}  {v}\n"));
    }
    out
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("null".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => i.to_string(),
            (None, Some(f)) => format!("{f:.6e}"),
            _ => n.to_string(),
        }),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, rows);
            }
        }
        Value::Array(items) if items.iter().all(|v| scalar_text(v).is_some()) => {
            let parts: Vec<String> = items.iter().filter_map(scalar_text).collect();
            rows.push((prefix.to_string(), format!("[{}]", parts.join(", "))));
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, rows);
            }
        }
        other => rows.push((prefix.to_string(), scalar_text(other).unwrap_or_default())),
    }
}
