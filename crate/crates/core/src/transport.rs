//! Nonlinear parallel transport `ẏ^k + N^k_j(σ, y) σ̇^j = 0` along curves.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::{Env, Expression, Parser};
use crate::jet::{Jet, Scalar};
use crate::metric::FinslerMetric;
use crate::tensor::{self, i2, i3, Geometry};

/// A transported vector whose Euclidean length drops below this fraction of `|y0|` aborts the run.
pub const COLLAPSE_RATIO: f64 = 1e-8;

/// `s ↦ σ(s)` on `[a, b]`, one expression in `s` per coordinate.
#[derive(Debug, Clone)]
pub struct Curve {
    components: Vec<Expression>,
    pub interval: [f64; 2],
    params: BTreeMap<String, f64>,
}

impl Serialize for Curve {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("Curve", 2)?;
        let x: Vec<String> = self.components.iter().map(|e| e.to_string()).collect();
        st.serialize_field("x", &x)?;
        st.serialize_field("interval", &self.interval)?;
        st.end()
    }
}

impl Curve {
    pub fn parse<T: AsRef<str>>(
        dimension: usize,
        sources: &[T],
        interval: [f64; 2],
        params: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        if sources.len() != dimension {
            return Err(Error::InvalidSpec(format!(
                "curve has {} components, metric dimension is {dimension}",
                sources.len()
            )));
        }
        if !(interval[0].is_finite() && interval[1].is_finite() && interval[0] < interval[1]) {
            return Err(Error::InvalidSpec(format!("curve interval {interval:?} is not a finite a < b")));
        }
        let parser = Parser::new(dimension).with_parameters(params.keys()).with_bound(["s"]);
        let mut components = Vec::with_capacity(dimension);
        for (i, src) in sources.iter().enumerate() {
            let e = parser.parse(src.as_ref()).map_err(|source| Error::ParseIn {
                context: format!("curve.x[{i}]"),
                source,
            })?;
            if e.references_x() || e.references_y() {
                return Err(Error::InvalidSpec(format!("curve.x[{i}] may depend on `s` only")));
            }
            components.push(e);
        }
        let curve = Curve {
            components,
            interval,
            params: params.clone(),
        };
        curve.velocity(interval[0])?;
        Ok(curve)
    }

    /// The spec's `curve` section, if any.
    pub fn from_metric(metric: &FinslerMetric) -> Result<Option<Self>> {
        match &metric.spec().curve {
            Some(c) => Ok(Some(Curve::parse(metric.dimension(), &c.x, c.interval, metric.parameters())?)),
            None => Ok(None),
        }
    }

    /// The segment `s ↦ from + s (to − from)`, `s ∈ [0, 1]`.
    pub fn segment(from: &[f64], to: &[f64]) -> Result<Self> {
        let sources: Vec<String> = from
            .iter()
            .zip(to)
            .map(|(a, b)| format!("({a:e}) + ({:e})*s", b - a))
            .collect();
        Curve::parse(from.len(), &sources, [0.0, 1.0], &BTreeMap::new())
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    fn eval_jets(&self, s: f64) -> Result<Vec<Jet>> {
        let sj = Jet::seed(&[s], 1)?;
        let empty: [Jet; 0] = [];
        let env = Env::new(&empty, &empty, &self.params).with_bound(&sj);
        let mut out = Vec::with_capacity(self.dimension());
        for e in &self.components {
            let v = e.evaluate(&env)?;
            if !v.value().is_finite() {
                return Err(Error::Numerical(format!("curve is not finite at s = {s}")));
            }
            out.push(v);
        }
        Ok(out)
    }

    pub fn point(&self, s: f64) -> Result<Vec<f64>> {
        Ok(self.eval_jets(s)?.iter().map(Scalar::value).collect())
    }

    /// `(σ(s), σ̇(s))`.
    pub fn point_and_velocity(&self, s: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let jets = self.eval_jets(s)?;
        let x = jets.iter().map(Scalar::value).collect();
        let v: Vec<f64> = jets
            .iter()
            .map(|j| if j.order() == 0 { 0.0 } else { j.coefficients()[1] })
            .collect();
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numerical(format!("curve velocity is not finite at s = {s}")));
        }
        Ok((x, v))
    }

    pub fn velocity(&self, s: f64) -> Result<Vec<f64>> {
        Ok(self.point_and_velocity(s)?.1)
    }
}

/// Samples of a transport run.
#[derive(Debug, Clone, Serialize)]
pub struct TransportResult {
    pub steps: usize,
    pub step_size: f64,
    pub s: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    /// `F(σ(s_k), y(s_k))`.
    pub f: Vec<f64>,
    /// Smallest Euclidean norm of `y` seen, relative to `|y0|`.
    pub min_relative_norm: f64,
}

impl TransportResult {
    /// CSV time series `s,y1..yn,F`.
    pub fn to_csv(&self) -> String {
        let n = self.y.first().map_or(0, Vec::len);
        let mut out = String::from("s");
        for i in 1..=n {
            out.push_str(&format!(",y{i}"));
        }
        out.push_str(",F\n");
        for k in 0..self.s.len() {
            out.push_str(&format!("{:e}", self.s[k]));
            for c in &self.y[k] {
                out.push_str(&format!(",{c:e}"));
            }
            out.push_str(&format!(",{:e}\n", self.f[k]));
        }
        out
    }
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(p, q)| q + a * p).collect()
}

/// One classical RK4 step of `ż = rhs(s, z)`.
fn rk4_step<F>(rhs: &F, s: f64, h: f64, z: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let k1 = rhs(s, z)?;
    let k2 = rhs(s + 0.5 * h, &axpy(0.5 * h, &k1, z))?;
    let k3 = rhs(s + 0.5 * h, &axpy(0.5 * h, &k2, z))?;
    let k4 = rhs(s + h, &axpy(h, &k3, z))?;
    Ok((0..z.len())
        .map(|i| z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn check_start(metric: &FinslerMetric, curve: &Curve, y0: &[f64], steps: usize) -> Result<()> {
    let n = metric.dimension();
    if curve.dimension() != n || y0.len() != n {
        return Err(Error::Argument(format!("curve and y0 must have {n} components")));
    }
    if steps == 0 {
        return Err(Error::Argument("steps must be positive".into()));
    }
    if euclid(y0) < 1e-12 {
        return Err(Error::ZeroSection { y: y0.to_vec() });
    }
    Ok(())
}

/// `ẏ^k = −N^k_j(σ, y) σ̇^j`.
fn transport_rhs(metric: &FinslerMetric, curve: &Curve, s: f64, y: &[f64]) -> Result<Vec<f64>> {
    let n = metric.dimension();
    let (x, v) = curve.point_and_velocity(s)?;
    let c = tensor::connection(metric, &x, y)?;
    Ok((0..n)
        .map(|k| -(0..n).map(|j| c.nonlinear[i2(n, k, j)] * v[j]).sum::<f64>())
        .collect())
}

/// Integrates the transport ODE with fixed-step RK4, recording every step.
pub fn parallel_transport(metric: &FinslerMetric, curve: &Curve, y0: &[f64], steps: usize) -> Result<TransportResult> {
    check_start(metric, curve, y0, steps)?;
    let [a, b] = curve.interval;
    let h = (b - a) / steps as f64;
    let y0_norm = euclid(y0);
    let rhs = |s: f64, y: &[f64]| transport_rhs(metric, curve, s, y);
    let mut y = y0.to_vec();
    let mut out = TransportResult {
        steps,
        step_size: h,
        s: vec![a],
        y: vec![y.clone()],
        f: vec![metric.f(&curve.point(a)?, &y)?],
        min_relative_norm: 1.0,
    };
    for k in 0..steps {
        let s = a + h * k as f64;
        y = rk4_step(&rhs, s, h, &y)?;
        let rel = euclid(&y) / y0_norm;
        if !(rel > COLLAPSE_RATIO) {
            return Err(Error::Numerical(format!("transported vector collapsed at s = {}", s + h)));
        }
        out.min_relative_norm = out.min_relative_norm.min(rel);
        let s1 = a + h * (k + 1) as f64;
        out.f.push(metric.f(&curve.point(s1)?, &y)?);
        out.s.push(s1);
        out.y.push(y.clone());
    }
    Ok(out)
}

/// `max_k |F(s_k) − F(a)|`.
pub fn norm_drift(result: &TransportResult) -> f64 {
    let f0 = result.f[0];
    result.f.iter().map(|f| (f - f0).abs()).fold(0.0, f64::max)
}

/// How frame vectors move along the base solution `(σ, y_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FrameRule {
    /// `ė^k = −(∂N^k_j/∂y^l) σ̇^j e^l`, the linearization of the transport flow.
    #[default]
    Linearized,
    /// `ė^k = −Γ^k_lj σ̇^j e^l` with the Chern coefficients at `(σ, y_s)`.
    Chern,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameTransportResult {
    pub rule: FrameRule,
    pub steps: usize,
    pub s: Vec<f64>,
    /// Frame at each sample, `frames[k][a]` the a-th vector.
    pub frames: Vec<Vec<Vec<f64>>>,
    /// `max_ab |g(e_a, e_b)(s_k) − g(e_a, e_b)(a)|` at each sample.
    pub metric_drift: Vec<f64>,
    pub max_drift: f64,
    /// `∫ max|Ȧ| |σ̇| ds` along `(σ, y_s)` by the trapezoid rule.
    pub landsberg_integral: f64,
    pub norm_drift: f64,
}

fn gram(g: &[f64], frame: &[Vec<f64>], n: usize) -> Vec<f64> {
    let m = frame.len();
    let mut out = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += g[i2(n, i, j)] * frame[a][i] * frame[b][j];
                }
            }
            out[a * m + b] = s;
        }
    }
    out
}

/// Transports `y0` and a frame together and reports the drift of the frame's Gram matrix
/// in `g(σ(s), y_s)`.
pub fn frame_transport_check(
    metric: &FinslerMetric,
    curve: &Curve,
    y0: &[f64],
    frame: &[Vec<f64>],
    steps: usize,
    rule: FrameRule,
) -> Result<FrameTransportResult> {
    check_start(metric, curve, y0, steps)?;
    let n = metric.dimension();
    if frame.len() != n || frame.iter().any(|e| e.len() != n) {
        return Err(Error::Argument(format!("frame must be {n} vectors of length {n}")));
    }
    let flat: Vec<f64> = (0..n * n).map(|k| frame[k % n][k / n]).collect();
    if tensor::determinant(&flat, n).abs() < 1e-12 {
        return Err(Error::Argument("frame vectors are linearly dependent".into()));
    }
    let [a, b] = curve.interval;
    let h = (b - a) / steps as f64;
    let y0_norm = euclid(y0);

    let rhs = |s: f64, z: &[f64]| -> Result<Vec<f64>> {
        let (x, v) = curve.point_and_velocity(s)?;
        let y = &z[..n];
        let geo = Geometry::at(metric, &x, y)?;
        let mut out = vec![0.0; z.len()];
        for (k, slot) in out.iter_mut().enumerate().take(n) {
            *slot = -(0..n).map(|j| geo.base.nonlinear[i2(n, k, j)] * v[j]).sum::<f64>();
        }
        let coeff: Vec<f64> = match rule {
            FrameRule::Linearized => geo.nonlinear_dy(),
            FrameRule::Chern => {
                // Γ^k_lj stored [k][l][j]; reorder to [k][j][l].
                let mut c = vec![0.0; n * n * n];
                for k in 0..n {
                    for l in 0..n {
                        for j in 0..n {
                            c[i3(n, k, j, l)] = geo.base.chern[i3(n, k, l, j)];
                        }
                    }
                }
                c
            }
        };
        for e in 0..n {
            let base = n * (e + 1);
            for k in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    for l in 0..n {
                        s += coeff[i3(n, k, j, l)] * v[j] * z[base + l];
                    }
                }
                out[base + k] = -s;
            }
        }
        Ok(out)
    };

    let landsberg_rate = |s: f64, y: &[f64]| -> Result<f64> {
        let (x, v) = curve.point_and_velocity(s)?;
        let geo = Geometry::at(metric, &x, y)?;
        Ok(geo.landsberg().max_abs() * euclid(&v))
    };

    let mut z: Vec<f64> = y0.iter().chain(frame.iter().flatten()).copied().collect();
    let unpack = |z: &[f64]| -> Vec<Vec<f64>> { (0..n).map(|e| z[n * (e + 1)..n * (e + 2)].to_vec()).collect() };
    let g0 = metric.fundamental_raw(&curve.point(a)?, y0)?;
    let gram0 = gram(&g0, frame, n);
    let f0 = metric.f(&curve.point(a)?, y0)?;

    let mut result = FrameTransportResult {
        rule,
        steps,
        s: vec![a],
        frames: vec![frame.to_vec()],
        metric_drift: vec![0.0],
        max_drift: 0.0,
        landsberg_integral: 0.0,
        norm_drift: 0.0,
    };
    let mut rate_prev = landsberg_rate(a, y0)?;
    for k in 0..steps {
        let s = a + h * k as f64;
        z = rk4_step(&rhs, s, h, &z)?;
        let s1 = a + h * (k + 1) as f64;
        let y = &z[..n];
        if !(euclid(y) / y0_norm > COLLAPSE_RATIO) {
            return Err(Error::Numerical(format!("transported vector collapsed at s = {s1}")));
        }
        let x1 = curve.point(s1)?;
        let frame_now = unpack(&z);
        let g = metric.fundamental_raw(&x1, y)?;
        let gr = gram(&g, &frame_now, n);
        let drift = gr.iter().zip(&gram0).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        result.max_drift = result.max_drift.max(drift);
        result.norm_drift = result.norm_drift.max((metric.f(&x1, y)? - f0).abs());
        let rate = landsberg_rate(s1, y)?;
        result.landsberg_integral += 0.5 * h * (rate + rate_prev);
        rate_prev = rate;
        result.metric_drift.push(drift);
        result.frames.push(frame_now);
        result.s.push(s1);
    }
    Ok(result)
}

/// Least-squares slope of `log error` against `log step size` for runs over a fixed interval.
pub fn convergence_order(steps: &[usize], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .zip(errors)
        .map(|(&s, &e)| (-(s as f64).ln(), e.ln()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// The coordinate basis.
pub fn coordinate_frame(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}
