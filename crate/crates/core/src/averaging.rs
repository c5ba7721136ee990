//! Averaged Riemannian metric `h = ⟨f g⟩` and its Levi-Civita connection.
//!
//! Averages are `⟨φ⟩ = (1/vol I_x) ∫_{I_x} φ √det g dΩ`. The connection of
//! `h` is computed twice: by differencing `h` in x (the reference), and by
//! the decomposition into a volume-gradient term, `⟨f ϑγ⟩`, a
//! log-density term and a measure term.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Env, Expression};
use crate::indicatrix::{richardson, IndicatrixSample, SphereGrid};
use crate::jet::{Jet, Scalar};
use crate::metric::FinslerMetric;
use crate::tensor::{self, i2, i3, Geometry, Symmetry, TensorTable};

/// Step for the x-differences of node data and of `h`.
pub const FD_STEP: f64 = 1e-3;

/// A positive weight `f(x, y)`, made 0-homogeneous by evaluating at `y/F(x, y)`.
#[derive(Debug, Clone)]
pub struct Measure {
    expr: Option<Expression>,
    params: BTreeMap<String, f64>,
}

impl Measure {
    /// `f ≡ 1`.
    pub fn unit() -> Self {
        Measure {
            expr: None,
            params: BTreeMap::new(),
        }
    }

    /// Parses `source` in the metric's dimension and parameter scope.
    pub fn parse(metric: &FinslerMetric, source: &str) -> Result<Self> {
        let expr = metric.spec().parse_in("measure", source)?;
        Ok(Measure {
            expr: Some(expr),
            params: metric.parameters().clone(),
        })
    }

    /// The spec's `measure` entry, or `f ≡ 1`.
    pub fn from_metric(metric: &FinslerMetric) -> Result<Self> {
        Ok(match metric.measure_expression()? {
            Some(expr) => Measure {
                expr: Some(expr),
                params: metric.parameters().clone(),
            },
            None => Measure::unit(),
        })
    }

    pub fn is_unit(&self) -> bool {
        self.expr.is_none()
    }

    pub fn source(&self) -> String {
        self.expr.as_ref().map_or_else(|| "1".to_string(), |e| e.to_string())
    }

    fn eval<S: Scalar>(&self, metric: &FinslerMetric, x: &[S], y: &[S]) -> Result<S> {
        let Some(expr) = &self.expr else {
            return Ok(y[0].lift(1.0));
        };
        let f = metric.finsler(x, y)?;
        let finv = f.recip();
        let yhat: Vec<S> = y.iter().map(|c| c.clone() * finv.clone()).collect();
        let v = expr.evaluate(&Env::new(x, &yhat, &self.params))?;
        if !(v.value() > 0.0) {
            return Err(Error::InvalidMetric(format!("measure value {} is not positive", v.value())));
        }
        Ok(v)
    }

    pub fn value(&self, metric: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<f64> {
        self.eval(metric, x, y)
    }

    /// `f` and `∂f/∂x` at fixed `y`.
    pub fn value_and_x_gradient(&self, metric: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
        let n = metric.dimension();
        if self.expr.is_none() {
            return Ok((1.0, vec![0.0; n]));
        }
        let xs = Jet::seed(x, 1)?;
        let ys: Vec<Jet> = y.iter().map(|&v| Jet::constant(n, 0, v)).collect();
        let v = self.eval(metric, &xs, &ys)?;
        let grad = (0..n)
            .map(|i| if v.order() == 0 { 0.0 } else { v.coefficients()[1 + i] })
            .collect();
        Ok((v.value(), grad))
    }
}

/// `h_ij(x)` with the data it was built from.
#[derive(Debug, Clone, Serialize)]
pub struct AveragedMetric {
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    #[serde(skip)]
    pub h_inv: Vec<f64>,
    pub volume: f64,
    pub measure: String,
    pub nodes: usize,
}

fn node_metric(metric: &FinslerMetric, measure: &Measure, sample: &IndicatrixSample) -> Result<Vec<(f64, Vec<f64>)>> {
    sample.map("averaged metric", |node| {
        let f = measure.value(metric, &sample.x, &node.y)?;
        Ok((f, metric.fundamental_raw(&sample.x, &node.y)?))
    })
}

fn average_matrix(sample: &IndicatrixSample, data: &[(f64, Vec<f64>)], n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let vals: Vec<f64> = data.iter().map(|(f, g)| f * g[i2(n, i, j)]).collect();
            let v = sample.average_values(&vals);
            h[i2(n, i, j)] = v;
            h[i2(n, j, i)] = v;
        }
    }
    h
}

/// `h_ij = (1/vol I_x) ∫ f g_ij √det g dΩ`.
pub fn averaged_metric(metric: &FinslerMetric, measure: &Measure, x: &[f64], grid: &SphereGrid) -> Result<AveragedMetric> {
    let n = metric.dimension();
    let sample = IndicatrixSample::new(metric, x, grid)?;
    let data = node_metric(metric, measure, &sample)?;
    let h = average_matrix(&sample, &data, n);
    let h_inv = tensor::invert(&h, n)?;
    Ok(AveragedMetric {
        x: x.to_vec(),
        h,
        h_inv,
        volume: sample.volume,
        measure: measure.source(),
        nodes: grid.len(),
    })
}

/// `⟨φ⟩(x)` for an integrand given at `(x, y)`.
pub fn averaged_scalar<F>(metric: &FinslerMetric, x: &[f64], grid: &SphereGrid, phi: F) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> Result<f64> + Sync + Send,
{
    let sample = IndicatrixSample::new(metric, x, grid)?;
    let values = sample.map("averaged scalar", |node| phi(x, &node.y))?;
    Ok(sample.average_values(&values))
}

/// `ϑ^i_j = h^il g_lj(x, y)`.
pub fn theta(metric: &FinslerMetric, h: &AveragedMetric, x: &[f64], y: &[f64]) -> Result<TensorTable> {
    let n = metric.dimension();
    let g = metric.fundamental_raw(x, y)?;
    Ok(TensorTable::new("theta", (1, 1), Symmetry::None, x, y, mat_mul(&h.h_inv, &g, n)))
}

fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i2(n, i, j)] = (0..n).map(|l| a[i2(n, i, l)] * b[i2(n, l, j)]).sum();
        }
    }
    out
}

/// `½ h^kl (∂_i h_lj + ∂_j h_il − ∂_l h_ij)` from x-derivatives `dh[l][j][i] = ∂_i h_lj`.
fn christoffel_from_dh(h_inv: &[f64], dh: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                out[i3(n, k, i, j)] = 0.5
                    * (0..n)
                        .map(|l| h_inv[i2(n, k, l)] * (dh[i3(n, l, j, i)] + dh[i3(n, i, l, j)] - dh[i3(n, i, j, l)]))
                        .sum::<f64>();
            }
        }
    }
    out
}

/// Levi-Civita symbols `^hΓ^k_ij` of `h`, from Richardson central differences of `h`.
pub fn levi_civita_direct(
    metric: &FinslerMetric,
    measure: &Measure,
    x: &[f64],
    grid: &SphereGrid,
    fd_step: f64,
) -> Result<TensorTable> {
    let n = metric.dimension();
    let center = averaged_metric(metric, measure, x, grid)?;
    let mut dh = vec![0.0; n * n * n];
    for s in 0..n {
        let mut cache: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        let mut h_at = |t: f64| -> Result<Vec<f64>> {
            if let Some(h) = cache.get(&t.to_bits()) {
                return Ok(h.clone());
            }
            let mut z = x.to_vec();
            z[s] += t;
            let h = averaged_metric(metric, measure, &z, grid)?.h;
            cache.insert(t.to_bits(), h.clone());
            Ok(h)
        };
        let mut shifted = Vec::new();
        for t in [fd_step, -fd_step, 0.5 * fd_step, -0.5 * fd_step] {
            shifted.push(h_at(t)?);
        }
        for l in 0..n {
            for j in 0..n {
                let k = i2(n, l, j);
                let vals = [shifted[0][k], shifted[1][k], shifted[2][k], shifted[3][k]];
                let coarse = (vals[0] - vals[1]) / (2.0 * fd_step);
                let fine = (vals[2] - vals[3]) / fd_step;
                dh[i3(n, l, j, s)] = (4.0 * fine - coarse) / 3.0;
            }
        }
    }
    let empty: [f64; 0] = [];
    Ok(TensorTable::new(
        "Gamma_h",
        (1, 2),
        Symmetry::SymmetricLastTwo,
        x,
        &empty,
        christoffel_from_dh(&center.h_inv, &dh, n),
    ))
}

/// The four terms of the decomposition of `^hΓ^k_ij`, stored `[k][i][j]`.
#[derive(Debug, Clone, Serialize)]
pub struct ChristoffelDecomposition {
    pub x: Vec<f64>,
    pub measure: String,
    pub volume: f64,
    pub h: Vec<f64>,
    /// `⟨J_i⟩` with `J_i = g(tr Ȧ, ∂_i)`; equals `−∂_i vol / vol`.
    pub mean_landsberg_trace: Vec<f64>,
    /// `⟨λ_i⟩` with `λ_i` the x-derivative of the log density at fixed direction.
    pub mean_log_density_rate: Vec<f64>,
    pub vol_term: Vec<f64>,
    pub theta_gamma: Vec<f64>,
    pub log_det: Vec<f64>,
    pub f_term: Vec<f64>,
    pub sum: Vec<f64>,
    /// Volume term with `f ϑ` paired node-wise with `J`.
    pub vol_term_nodewise: Vec<f64>,
    /// Log-density term with `h_ij h^kl` in place of `h^kl g_ij`.
    pub log_det_nodewise: Vec<f64>,
    pub sum_nodewise: Vec<f64>,
    pub symmetry_residual: f64,
}

struct NodeTerms {
    f: f64,
    df: Vec<f64>,
    g: Vec<f64>,
    gamma: Vec<f64>,
    trace: Vec<f64>,
    lambda: Vec<f64>,
}

/// `log(ρⁿ √det g)` at `(z, u/F(z, u))`.
fn log_density(metric: &FinslerMetric, z: &[f64], u: &[f64]) -> Result<f64> {
    let n = metric.dimension();
    let f = metric.f(z, u)?;
    let y: Vec<f64> = u.iter().map(|c| c / f).collect();
    let g = metric.fundamental_raw(z, &y)?;
    let det = tensor::determinant(&g, n);
    if !(det > 0.0) {
        return Err(Error::Numerical(format!("det g = {det} is not positive")));
    }
    Ok(0.5 * det.ln() - n as f64 * f.ln())
}

fn symmetric_residual(t: &[f64], n: usize) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((t[i3(n, k, i, j)] - t[i3(n, k, j, i)]).abs());
            }
        }
    }
    worst
}

pub fn levi_civita_decomposed(
    metric: &FinslerMetric,
    measure: &Measure,
    x: &[f64],
    grid: &SphereGrid,
) -> Result<ChristoffelDecomposition> {
    let n = metric.dimension();
    let sample = IndicatrixSample::new(metric, x, grid)?;
    let nodes = sample.map("connection decomposition", |node| {
        let geo = Geometry::at(metric, x, &node.y)?;
        let adot = geo.landsberg();
        let (trace, _) = geo.landsberg_trace(&adot);
        let (f, df) = measure.value_and_x_gradient(metric, x, &node.y)?;
        let mut lambda = vec![0.0; n];
        for (i, l) in lambda.iter_mut().enumerate() {
            *l = richardson(
                |t| {
                    let mut z = x.to_vec();
                    z[i] += t;
                    log_density(metric, &z, &node.u)
                },
                FD_STEP,
            )?;
        }
        let data = geo.chern_data();
        Ok(NodeTerms {
            f,
            df,
            g: data.g.components,
            gamma: data.gamma.components,
            trace,
            lambda,
        })
    })?;
    let avg = |value: &dyn Fn(&NodeTerms) -> f64| -> f64 {
        let vals: Vec<f64> = nodes.iter().map(value).collect();
        sample.average_values(&vals)
    };

    let fg: Vec<(f64, Vec<f64>)> = nodes.iter().map(|t| (t.f, t.g.clone())).collect();
    let h = average_matrix(&sample, &fg, n);
    let h_inv = tensor::invert(&h, n)?;
    let theta_of = |t: &NodeTerms| mat_mul(&h_inv, &t.g, n);
    let thetas: Vec<Vec<f64>> = nodes.iter().map(theta_of).collect();
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };

    let mean_j: Vec<f64> = (0..n).map(|i| avg(&|t| t.trace[i])).collect();
    let mean_lambda: Vec<f64> = (0..n).map(|i| avg(&|t| t.lambda[i])).collect();

    let size = n * n * n;
    let mut vol_term = vec![0.0; size];
    let mut theta_gamma = vec![0.0; size];
    let mut log_det = vec![0.0; size];
    let mut f_term = vec![0.0; size];
    let mut vol_nodewise = vec![0.0; size];
    let mut log_nodewise = vec![0.0; size];

    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let idx = i3(n, k, i, j);
                let hj: f64 = (0..n).map(|l| h_inv[i2(n, k, l)] * mean_j[l]).sum();
                vol_term[idx] = 0.5 * (delta(k, j) * mean_j[i] + delta(k, i) * mean_j[j] - h[i2(n, i, j)] * hj);

                let mut tg = vec![0.0; nodes.len()];
                let mut ld = vec![0.0; nodes.len()];
                let mut ft = vec![0.0; nodes.len()];
                let mut vn = vec![0.0; nodes.len()];
                let mut ln = vec![0.0; nodes.len()];
                for (a, t) in nodes.iter().enumerate() {
                    let th = &thetas[a];
                    tg[a] = t.f * (0..n).map(|m| th[i2(n, k, m)] * t.gamma[i3(n, m, i, j)]).sum::<f64>();
                    let hl: f64 = (0..n).map(|l| h_inv[i2(n, k, l)] * t.lambda[l]).sum();
                    ld[a] = 0.5
                        * t.f
                        * (th[i2(n, k, j)] * t.lambda[i] + th[i2(n, k, i)] * t.lambda[j] - t.g[i2(n, i, j)] * hl);
                    ln[a] = 0.5
                        * t.f
                        * (th[i2(n, k, j)] * t.lambda[i] + th[i2(n, k, i)] * t.lambda[j] - h[i2(n, i, j)] * hl);
                    ft[a] = 0.5
                        * (0..n)
                            .map(|s| {
                                h_inv[i2(n, k, s)]
                                    * (t.df[i] * t.g[i2(n, s, j)] + t.df[j] * t.g[i2(n, i, s)]
                                        - t.df[s] * t.g[i2(n, i, j)])
                            })
                            .sum::<f64>();
                    let hjt: f64 = (0..n).map(|l| h_inv[i2(n, k, l)] * t.trace[l]).sum();
                    vn[a] = 0.5
                        * t.f
                        * (th[i2(n, k, j)] * t.trace[i] + th[i2(n, k, i)] * t.trace[j] - h[i2(n, i, j)] * hjt);
                }
                theta_gamma[idx] = sample.average_values(&tg);
                log_det[idx] = sample.average_values(&ld);
                f_term[idx] = sample.average_values(&ft);
                vol_nodewise[idx] = sample.average_values(&vn);
                log_nodewise[idx] = sample.average_values(&ln);
            }
        }
    }
    let add = |parts: [&Vec<f64>; 4]| -> Vec<f64> { (0..size).map(|a| parts.iter().map(|p| p[a]).sum()).collect() };
    let sum = add([&vol_term, &theta_gamma, &log_det, &f_term]);
    let sum_nodewise = add([&vol_nodewise, &theta_gamma, &log_nodewise, &f_term]);
    let symmetry_residual = [&vol_term, &theta_gamma, &log_det, &f_term]
        .iter()
        .map(|t| symmetric_residual(t, n))
        .fold(0.0, f64::max);
    Ok(ChristoffelDecomposition {
        x: x.to_vec(),
        measure: measure.source(),
        volume: sample.volume,
        h,
        mean_landsberg_trace: mean_j,
        mean_log_density_rate: mean_lambda,
        vol_term,
        theta_gamma,
        log_det,
        f_term,
        sum,
        vol_term_nodewise: vol_nodewise,
        log_det_nodewise: log_nodewise,
        sum_nodewise,
        symmetry_residual,
    })
}

/// `⟨ϑγ⟩` (with `f ≡ 1`) over `I(x, λ)`, stored `[k][i][j]`.
pub fn averaged_christoffel_integrand(metric: &FinslerMetric, x: &[f64], grid: &SphereGrid, lambda: f64) -> Result<Vec<f64>> {
    let n = metric.dimension();
    let sample = IndicatrixSample::at_radius(metric, x, grid, lambda)?;
    let data = sample.map("sphere integrand", |node| {
        let c = tensor::connection(metric, x, &node.y)?;
        Ok((c.g, c.gamma))
    })?;
    let fg: Vec<(f64, Vec<f64>)> = data.iter().map(|(g, _)| (1.0, g.clone())).collect();
    let h = average_matrix(&sample, &fg, n);
    let h_inv = tensor::invert(&h, n)?;
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let vals: Vec<f64> = data
                    .iter()
                    .map(|(g, gamma)| {
                        let th = mat_mul(&h_inv, g, n);
                        (0..n).map(|m| th[i2(n, k, m)] * gamma[i3(n, m, i, j)]).sum()
                    })
                    .collect();
                out[i3(n, k, i, j)] = sample.average_values(&vals);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereInvariance {
    pub lambdas: Vec<f64>,
    pub max_deviation: f64,
}

/// Max deviation of the averaged Christoffel integrand over `I(x, λ)` from its `I_x` value.
pub fn sphere_invariance_check(metric: &FinslerMetric, x: &[f64], lambdas: &[f64], grid: &SphereGrid) -> Result<SphereInvariance> {
    let reference = averaged_christoffel_integrand(metric, x, grid, 1.0)?;
    let mut max_deviation = 0.0f64;
    for &l in lambdas {
        let v = averaged_christoffel_integrand(metric, x, grid, l)?;
        for (a, b) in v.iter().zip(&reference) {
            max_deviation = max_deviation.max((a - b).abs());
        }
    }
    Ok(SphereInvariance {
        lambdas: lambdas.to_vec(),
        max_deviation,
    })
}
