//! Metric specifications, built-in families and sampling-based validation.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{self, Env, Expression, Parser};
use crate::jet::{Jet, Scalar};

/// Current version of the metric-spec JSON schema.
pub const SCHEMA_VERSION: u32 = 1;

/// Vectors shorter than this are treated as the zero section.
pub const ZERO_SECTION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Euclidean,
    Riemannian,
    Randers,
    Minkowski,
    Dsl,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Euclidean => "euclidean",
            Family::Riemannian => "riemannian",
            Family::Randers => "randers",
            Family::Minkowski => "minkowski",
            Family::Dsl => "dsl",
        }
    }
}

/// A curve `s ↦ x(s)` given by one expression per coordinate in the bound
/// variable `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub x: Vec<String>,
    #[serde(default = "unit_interval")]
    pub interval: [f64; 2],
}

fn unit_interval() -> [f64; 2] {
    [0.0, 1.0]
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

/// Declarative metric description, as read from JSON.
///
/// Coefficient keys: `aij` (Riemannian matrix entries, functions of x, the
/// unlisted diagonal defaulting to 1 and off-diagonal to 0), `bi` (Randers
/// one-form), `F` (Minkowski or general norm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub family: Family,
    pub dimension: usize,
    #[serde(default)]
    pub coefficients: BTreeMap<String, String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveSpec>,
}

impl MetricSpec {
    pub fn new(family: Family, dimension: usize) -> Self {
        MetricSpec {
            schema_version: SCHEMA_VERSION,
            name: None,
            family,
            dimension,
            coefficients: BTreeMap::new(),
            parameters: BTreeMap::new(),
            measure: None,
            curve: None,
        }
    }

    pub fn coefficient(mut self, key: &str, expr: &str) -> Self {
        self.coefficients.insert(key.to_string(), expr.to_string());
        self
    }

    pub fn parameter(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn with_measure(mut self, expr: &str) -> Self {
        self.measure = Some(expr.to_string());
        self
    }

    pub fn with_curve(mut self, x: &[&str], interval: [f64; 2]) -> Self {
        self.curve = Some(CurveSpec {
            x: x.iter().map(|s| s.to_string()).collect(),
            interval,
        });
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: MetricSpec = serde_json::from_str(text)?;
        if spec.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidSpec(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                spec.schema_version
            )));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub(crate) fn parser(&self) -> Parser {
        Parser::new(self.dimension).with_parameters(self.parameters.keys().cloned())
    }

    pub(crate) fn parse_in(&self, key: &str, source: &str) -> Result<Expression> {
        self.parser().parse(source).map_err(|e| Error::ParseIn {
            context: key.to_string(),
            source: e,
        })
    }
}

#[derive(Debug, Clone)]
enum Kind {
    /// `√(a_ij y^i y^j) + b_i y^i`, with `b` absent for Riemannian metrics.
    Quadratic {
        a: Vec<Option<Expression>>,
        b: Option<Vec<Option<Expression>>>,
    },
    General(Expression),
}

/// An instantiated Finsler function `F(x, y)`.
#[derive(Debug, Clone)]
pub struct FinslerMetric {
    spec: MetricSpec,
    kind: Kind,
    x_independent: bool,
}

fn zero_of<S: Scalar>(template: &S) -> S {
    template.lift(0.0)
}

impl FinslerMetric {
    /// Parses and checks a spec; Randers specs are rejected when
    /// `‖β‖_α ≥ 1` at any of the default validation points.
    pub fn instantiate(spec: &MetricSpec) -> Result<Self> {
        let n = spec.dimension;
        if !(1..=4).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        let allowed: Vec<String> = match spec.family {
            Family::Euclidean => Vec::new(),
            Family::Riemannian => matrix_keys(n),
            Family::Randers => matrix_keys(n)
                .into_iter()
                .chain((1..=n).map(|i| format!("b{i}")))
                .collect(),
            Family::Minkowski | Family::Dsl => vec!["F".to_string()],
        };
        for key in spec.coefficients.keys() {
            if !allowed.contains(key) {
                return Err(Error::InvalidSpec(format!(
                    "coefficient `{key}` is not valid for family {} in dimension {n}",
                    spec.family.name()
                )));
            }
        }

        let kind = match spec.family {
            Family::Euclidean | Family::Riemannian | Family::Randers => {
                let mut a = vec![None; n * n];
                for i in 0..n {
                    for j in i..n {
                        let key = format!("a{}{}", i + 1, j + 1);
                        let alt = format!("a{}{}", j + 1, i + 1);
                        let src = match (spec.coefficients.get(&key), spec.coefficients.get(&alt)) {
                            (Some(s), Some(t)) if i != j && s != t => {
                                return Err(Error::InvalidSpec(format!(
                                    "`{key}` and `{alt}` differ; the matrix must be symmetric"
                                )))
                            }
                            (Some(s), _) | (None, Some(s)) => Some(s.clone()),
                            (None, None) => None,
                        };
                        let e = match src {
                            Some(s) => Some(coefficient_expr(spec, &key, &s)?),
                            None if i == j => Some(spec.parse_in(&key, "1")?),
                            None => None,
                        };
                        a[i * n + j] = e.clone();
                        a[j * n + i] = e;
                    }
                }
                let b = if spec.family == Family::Randers {
                    let mut b = Vec::with_capacity(n);
                    for i in 0..n {
                        let key = format!("b{}", i + 1);
                        b.push(match spec.coefficients.get(&key) {
                            Some(s) => Some(coefficient_expr(spec, &key, s)?),
                            None => None,
                        });
                    }
                    Some(b)
                } else {
                    None
                };
                Kind::Quadratic { a, b }
            }
            Family::Minkowski | Family::Dsl => {
                let src = spec.coefficients.get("F").ok_or_else(|| {
                    Error::InvalidSpec(format!("family {} needs coefficient `F`", spec.family.name()))
                })?;
                let e = spec.parse_in("F", src)?;
                if spec.family == Family::Minkowski && e.references_x() {
                    return Err(Error::InvalidSpec(
                        "minkowski norm must not depend on x".into(),
                    ));
                }
                Kind::General(e)
            }
        };

        let x_independent = match &kind {
            Kind::Quadratic { a, b } => a
                .iter()
                .chain(b.iter().flatten())
                .flatten()
                .all(|e| !e.references_x()),
            Kind::General(e) => !e.references_x(),
        };
        let metric = FinslerMetric {
            spec: spec.clone(),
            kind,
            x_independent,
        };
        if spec.family == Family::Randers {
            for x in default_x_samples(n, 5) {
                let norm = metric.randers_b_norm(&x)?;
                if norm >= 1.0 {
                    return Err(Error::InvalidMetric(format!(
                        "Randers one-form has ‖b‖_α = {norm:.6} ≥ 1 at x = {x:?}; strong convexity fails"
                    )));
                }
            }
        }
        Ok(metric)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::instantiate(&MetricSpec::from_json(text)?)
    }

    pub fn euclidean(n: usize) -> Self {
        Self::instantiate(&MetricSpec::new(Family::Euclidean, n)).expect("euclidean spec is valid")
    }

    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn parameters(&self) -> &BTreeMap<String, f64> {
        &self.spec.parameters
    }

    /// True when no coefficient depends on x (a locally Minkowski metric).
    pub fn is_x_independent(&self) -> bool {
        self.x_independent
    }

    /// True for families whose fundamental tensor cannot depend on y.
    pub fn is_riemannian_family(&self) -> bool {
        matches!(self.spec.family, Family::Euclidean | Family::Riemannian)
    }

    /// True when some expression uses `abs`, which is not smooth at 0.
    pub fn uses_abs(&self) -> bool {
        match &self.kind {
            Kind::Quadratic { a, b } => a.iter().chain(b.iter().flatten()).flatten().any(|e| e.uses_abs()),
            Kind::General(e) => e.uses_abs(),
        }
    }

    fn coefficient<S: Scalar>(&self, e: &Option<Expression>, x: &[S], template: &S) -> Result<S> {
        let params = &self.spec.parameters;
        match e {
            Some(e) => Ok(e.evaluate(&Env::new(x, &[], params))?),
            None => Ok(zero_of(template)),
        }
    }

    fn quadratic<S: Scalar>(&self, a: &[Option<Expression>], x: &[S], y: &[S]) -> Result<S> {
        let n = self.dimension();
        let t = &y[0];
        let mut q = zero_of(t);
        for i in 0..n {
            for j in i..n {
                if a[i * n + j].is_none() {
                    continue;
                }
                let c = self.coefficient(&a[i * n + j], x, t)?;
                let term = c * y[i].clone() * y[j].clone();
                q = if i == j { q + term } else { q + term.scale(2.0) };
            }
        }
        Ok(q)
    }

    fn one_form<S: Scalar>(&self, b: &[Option<Expression>], x: &[S], y: &[S]) -> Result<S> {
        let t = &y[0];
        let mut beta = zero_of(t);
        for (i, bi) in b.iter().enumerate() {
            if bi.is_some() {
                beta = beta + self.coefficient(bi, x, t)? * y[i].clone();
            }
        }
        Ok(beta)
    }

    /// `F(x, y)` over any scalar.
    pub fn finsler<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S> {
        self.check_args(x.len(), y)?;
        match &self.kind {
            Kind::Quadratic { a, b } => {
                let q = self.quadratic(a, x, y)?;
                if q.value() <= 0.0 {
                    return Err(Error::InvalidMetric(format!(
                        "quadratic form a_ij y^i y^j = {} is not positive",
                        q.value()
                    )));
                }
                let alpha = q.sqrt();
                match b {
                    Some(b) => Ok(alpha + self.one_form(b, x, y)?),
                    None => Ok(alpha),
                }
            }
            Kind::General(e) => Ok(e.evaluate(&Env::new(x, y, &self.spec.parameters))?),
        }
    }

    /// `F²(x, y)`; for Riemannian families this avoids the square root.
    pub fn finsler_squared<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S> {
        if let Kind::Quadratic { a, b: None } = &self.kind {
            self.check_args(x.len(), y)?;
            return self.quadratic(a, x, y);
        }
        let f = self.finsler(x, y)?;
        Ok(f.clone() * f)
    }

    fn check_args<S: Scalar>(&self, xlen: usize, y: &[S]) -> Result<()> {
        let n = self.dimension();
        if xlen != n || y.len() != n {
            return Err(Error::Argument(format!(
                "expected points of dimension {n}, got x of length {xlen} and y of length {}",
                y.len()
            )));
        }
        let norm = y.iter().map(|c| c.value() * c.value()).sum::<f64>().sqrt();
        if !(norm >= ZERO_SECTION) {
            return Err(Error::ZeroSection {
                y: y.iter().map(|c| c.value()).collect(),
            });
        }
        Ok(())
    }

    /// Plain-number `F(x, y)`, required to be positive.
    pub fn f(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let v = self.finsler(x, y)?;
        if !(v > 0.0) {
            return Err(Error::InvalidMetric(format!("F(x, y) = {v} is not positive at x = {x:?}, y = {y:?}")));
        }
        Ok(v)
    }

    /// `F²` as a jet in the `2n` variables `(x, y)` at the given order.
    pub fn f2_jet(&self, x: &[f64], y: &[f64], order: usize) -> Result<Jet> {
        let point: Vec<f64> = x.iter().chain(y).copied().collect();
        let vars = Jet::seed(&point, order)?;
        let n = self.dimension();
        self.finsler_squared(&vars[..n], &vars[n..])
    }

    /// `F²` as a jet in `y` only; x enters as constants.
    pub fn f2_jet_y(&self, x: &[f64], y: &[f64], order: usize) -> Result<Jet> {
        let ys = Jet::seed(y, order)?;
        let n = self.dimension();
        let xs: Vec<Jet> = x.iter().map(|&v| Jet::constant(n, 0, v)).collect();
        self.finsler_squared(&xs, &ys)
    }

    /// Fundamental tensor `g_ij = ½ ∂²F²/∂y^i∂y^j` (row-major, no definiteness check).
    pub fn fundamental_raw(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let n = self.dimension();
        let jet = self.f2_jet_y(x, y, 2)?;
        let mut g = vec![0.0; n * n];
        let mut alpha = vec![0u8; n];
        for i in 0..n {
            for j in i..n {
                alpha.iter_mut().for_each(|a| *a = 0);
                alpha[i] += 1;
                alpha[j] += 1;
                let v = 0.5 * jet.derivative_unchecked(&alpha);
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        Ok(g)
    }

    /// `‖b‖_α = √(a^ij b_i b_j)` for Randers metrics; 0 otherwise.
    pub fn randers_b_norm(&self, x: &[f64]) -> Result<f64> {
        let Kind::Quadratic { a, b: Some(b) } = &self.kind else {
            return Ok(0.0);
        };
        let n = self.dimension();
        let one = 1.0f64;
        let mut am = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                am[(i, j)] = self.coefficient(&a[i * n + j], x, &one)?;
            }
        }
        let bv: Vec<f64> = b
            .iter()
            .map(|bi| self.coefficient(bi, x, &one))
            .collect::<Result<_>>()?;
        let inv = am
            .try_inverse()
            .ok_or_else(|| Error::Singular(format!("Randers α matrix at x = {x:?}")))?;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += inv[(i, j)] * bv[i] * bv[j];
            }
        }
        Ok(s.max(0.0).sqrt())
    }

    /// Parses the spec's measure expression, if any.
    pub fn measure_expression(&self) -> Result<Option<Expression>> {
        self.spec
            .measure
            .as_deref()
            .map(|m| self.spec.parse_in("measure", m))
            .transpose()
    }
}

fn matrix_keys(n: usize) -> Vec<String> {
    let mut keys = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            keys.push(format!("a{i}{j}"));
        }
    }
    keys
}

fn coefficient_expr(spec: &MetricSpec, key: &str, src: &str) -> Result<Expression> {
    let e = spec.parse_in(key, src)?;
    if e.references_y() {
        return Err(Error::InvalidSpec(format!(
            "coefficient `{key}` must be a function of x only"
        )));
    }
    Ok(e)
}

/// Default x-probes: the origin followed by deterministic points in `[-0.5, 0.5]^n`.
pub fn default_x_samples(n: usize, count: usize) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xf1e1d);
    let mut out = vec![vec![0.0; n]];
    while out.len() < count {
        out.push((0..n).map(|_| rng.gen_range(-0.5..0.5)).collect());
    }
    out.truncate(count);
    out
}

/// Minimum eigenvalue of a symmetric row-major matrix.
pub fn min_eigenvalue(m: &[f64], n: usize) -> f64 {
    let mat = DMatrix::from_row_slice(n, n, m);
    SymmetricEigen::new(mat).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Sampling-based check of the Finsler conditions.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub tolerance: f64,
    pub homogeneity_residual: f64,
    pub min_f: f64,
    pub positive: bool,
    pub min_eigenvalue: f64,
    /// Max relative residual of `F² = g_ij y^i y^j`.
    pub euler_residual: f64,
    /// Max spread of `g` over directions at fixed x.
    pub y_variation: f64,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
    pub passed: bool,
}

impl FinslerMetric {
    /// Evaluates F and g over `x_samples × y_samples`, collecting failures.
    pub fn validate(&self, x_samples: &[Vec<f64>], y_samples: &[Vec<f64>], tolerance: f64) -> ValidationReport {
        let n = self.dimension();
        let mut rep = ValidationReport {
            samples: 0,
            tolerance,
            homogeneity_residual: 0.0,
            min_f: f64::INFINITY,
            positive: true,
            min_eigenvalue: f64::INFINITY,
            euler_residual: 0.0,
            y_variation: 0.0,
            warnings: Vec::new(),
            errors: Vec::new(),
            passed: false,
        };
        if self.uses_abs() {
            rep.warnings.push("expression uses abs(), which is not smooth at 0; second y-derivatives may be undefined there".into());
        }
        for x in x_samples {
            match expr::homogeneity_residual(|y| self.finsler(x, y), 1, y_samples) {
                Ok(r) => rep.homogeneity_residual = rep.homogeneity_residual.max(r),
                Err(e) => rep.errors.push(format!("homogeneity at x = {x:?}: {e}")),
            }
            let mut first: Option<Vec<f64>> = None;
            for y in y_samples {
                rep.samples += 1;
                let f = match self.finsler(x, y.as_slice()) {
                    Ok(f) => f,
                    Err(e) => {
                        rep.errors.push(format!("F at x = {x:?}, y = {y:?}: {e}"));
                        continue;
                    }
                };
                rep.min_f = rep.min_f.min(f);
                if !(f > 0.0) {
                    rep.positive = false;
                }
                let g = match self.fundamental_raw(x, y) {
                    Ok(g) => g,
                    Err(e) => {
                        rep.errors.push(format!("g at x = {x:?}, y = {y:?}: {e}"));
                        continue;
                    }
                };
                rep.min_eigenvalue = rep.min_eigenvalue.min(min_eigenvalue(&g, n));
                let mut gyy = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        gyy += g[i * n + j] * y[i] * y[j];
                    }
                }
                rep.euler_residual = rep.euler_residual.max((gyy - f * f).abs() / (f * f).max(1e-300));
                match &first {
                    None => first = Some(g),
                    Some(g0) => {
                        let d = g0.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                        rep.y_variation = rep.y_variation.max(d);
                    }
                }
            }
        }
        rep.passed = rep.errors.is_empty()
            && rep.positive
            && rep.min_eigenvalue > 0.0
            && rep.homogeneity_residual <= tolerance;
        rep
    }

    /// [`FinslerMetric::validate`] on the default grid: 5 x-points × 64 directions, tolerance 1e-8.
    pub fn validate_default(&self) -> ValidationReport {
        let n = self.dimension();
        let xs = default_x_samples(n, 5);
        let ys = expr::probe_directions(n, 64, 0xd1ec);
        self.validate(&xs, &ys, 1e-8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn randers(b1: &str) -> FinslerMetric {
        FinslerMetric::instantiate(&MetricSpec::new(Family::Randers, 2).coefficient("b1", b1)).unwrap()
    }

    #[test]
    fn euclidean_three_four_five() {
        let m = FinslerMetric::euclidean(2);
        assert_eq!(m.f(&[0.3, -1.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert!(m.is_x_independent());
    }

    #[test]
    fn randers_value() {
        let m = randers("0.5");
        assert_abs_diff_eq!(m.f(&[1.0, 2.0], &[1.0, 0.0]).unwrap(), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn randers_rejected_when_b_too_long() {
        let err = FinslerMetric::instantiate(&MetricSpec::new(Family::Randers, 2).coefficient("b1", "1.1"))
            .unwrap_err();
        assert!(matches!(err, Error::InvalidMetric(_)));
    }

    #[test]
    fn randers_b_norm_uses_alpha() {
        let spec = MetricSpec::new(Family::Randers, 2)
            .coefficient("a11", "4")
            .coefficient("b1", "1.5");
        let m = FinslerMetric::instantiate(&spec).unwrap();
        assert_abs_diff_eq!(m.randers_b_norm(&[0.0, 0.0]).unwrap(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_riemannian_eigenvalues() {
        let spec = MetricSpec::new(Family::Riemannian, 2)
            .coefficient("a11", "a^2")
            .coefficient("a22", "b^2")
            .parameter("a", 2.0)
            .parameter("b", 3.0);
        let m = FinslerMetric::instantiate(&spec).unwrap();
        for y in [[1.0, 0.0], [0.3, -0.7], [-2.0, 5.0]] {
            let g = m.fundamental_raw(&[0.1, 0.2], &y).unwrap();
            assert_abs_diff_eq!(g[0], 4.0, epsilon = 1e-14);
            assert_abs_diff_eq!(g[3], 9.0, epsilon = 1e-14);
            assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-14);
        }
        let rep = m.validate_default();
        assert!(rep.passed, "{rep:?}");
        assert_abs_diff_eq!(rep.min_eigenvalue, 4.0, epsilon = 1e-12);
        assert!(rep.y_variation <= 1e-10);
    }

    #[test]
    fn euclidean_validation_min_eigenvalue_one() {
        let rep = FinslerMetric::euclidean(3).validate_default();
        assert!(rep.passed);
        assert_abs_diff_eq!(rep.min_eigenvalue, 1.0, epsilon = 1e-14);
        assert!(rep.homogeneity_residual < 1e-14);
    }

    #[test]
    fn quartic_norm_degenerates_near_axes() {
        let spec = MetricSpec::new(Family::Minkowski, 2).coefficient("F", "(y1^4 + y2^4)^(1/4)");
        let m = FinslerMetric::instantiate(&spec).unwrap();
        let ys: Vec<Vec<f64>> = (0..64)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / 64.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let x = vec![vec![0.0, 0.0]];
        let rep = m.validate(&x, &ys, 1e-8);
        assert!(rep.min_eigenvalue > 0.0);
        // Near an axis the smallest eigenvalue collapses like sin²θ.
        let near = m.fundamental_raw(&[0.0, 0.0], &[1.0, 1e-3]).unwrap();
        let far = m.fundamental_raw(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(min_eigenvalue(&near, 2) < 1e-4);
        assert!(min_eigenvalue(&far, 2) > 0.3);
    }

    #[test]
    fn zero_section_is_rejected() {
        let m = FinslerMetric::euclidean(2);
        assert!(matches!(m.f(&[0.0, 0.0], &[0.0, 1e-13]), Err(Error::ZeroSection { .. })));
    }

    #[test]
    fn euler_identity_on_randers() {
        let m = randers("0.3*x2");
        let rep = m.validate_default();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.euler_residual <= 1e-9);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = MetricSpec::new(Family::Randers, 2)
            .named("r")
            .coefficient("b1", "0.3*x2")
            .with_measure("1 + 0.5*y1^2");
        let back = MetricSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn bad_specs() {
        let unknown = MetricSpec::new(Family::Riemannian, 2).coefficient("b1", "1");
        assert!(matches!(FinslerMetric::instantiate(&unknown), Err(Error::InvalidSpec(_))));
        let asym = MetricSpec::new(Family::Riemannian, 2)
            .coefficient("a12", "0.1")
            .coefficient("a21", "0.2");
        assert!(matches!(FinslerMetric::instantiate(&asym), Err(Error::InvalidSpec(_))));
        let y_dep = MetricSpec::new(Family::Riemannian, 2).coefficient("a11", "1 + y1^2");
        assert!(matches!(FinslerMetric::instantiate(&y_dep), Err(Error::InvalidSpec(_))));
        let parse = MetricSpec::new(Family::Dsl, 2).coefficient("F", "sqrt(y1^2 +");
        assert!(matches!(FinslerMetric::instantiate(&parse), Err(Error::ParseIn { .. })));
        assert!(matches!(
            MetricSpec::from_json(r#"{"family":"euclidean","dimension":2,"schema_version":9}"#),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn abs_is_flagged() {
        let spec = MetricSpec::new(Family::Minkowski, 2).coefficient("F", "sqrt(y1^2 + y2^2) + 0.1*abs(y1)");
        let rep = FinslerMetric::instantiate(&spec).unwrap().validate_default();
        assert_eq!(rep.warnings.len(), 1);
    }
}
