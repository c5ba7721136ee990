//! Quadrature over the indicatrix `I_x = {y : F(x, y) = 1}`.
//!
//! Each unit Euclidean direction `u` is mapped to `y = ρ u` with
//! `ρ = 1/F(x, u)`; the canonical volume form pulls back to
//! `ρⁿ √det g(x, y) dσ(u)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::FinslerMetric;
use crate::tensor::Geometry;

/// Quadrature nodes and weights on the unit sphere `S^{n−1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereGrid {
    pub dimension: usize,
    /// Points per coordinate, e.g. `[polar, azimuth]` for `n = 3`.
    pub shape: Vec<usize>,
    #[serde(skip)]
    pub directions: Vec<Vec<f64>>,
    #[serde(skip)]
    pub weights: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[m - 1 - i] = z;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

impl SphereGrid {
    /// Grid with an explicit shape: `[k]` for the circle, `[polar, azimuth]`
    /// for `S²`, `[ψ, polar, azimuth]` for `S³`.
    pub fn with_shape(n: usize, shape: &[usize]) -> Result<Self> {
        if !(2..=4).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        if shape.len() != n - 1 || shape.contains(&0) {
            return Err(Error::Argument(format!(
                "grid shape {shape:?} does not fit dimension {n}"
            )));
        }
        let mut directions = Vec::new();
        let mut weights = Vec::new();
        match n {
            2 => {
                let k = shape[0];
                let w = 2.0 * PI / k as f64;
                for a in 0..k {
                    let t = w * a as f64;
                    directions.push(vec![t.cos(), t.sin()]);
                    weights.push(w);
                }
            }
            3 => {
                let (cs, ws) = gauss_legendre(shape[0]);
                let k = shape[1];
                let wphi = 2.0 * PI / k as f64;
                for (c, wc) in cs.iter().zip(&ws) {
                    let s = (1.0 - c * c).sqrt();
                    for b in 0..k {
                        let phi = wphi * (b as f64 + 0.5);
                        directions.push(vec![s * phi.cos(), s * phi.sin(), *c]);
                        weights.push(wc * wphi);
                    }
                }
            }
            _ => {
                // Second-kind Gauss–Chebyshev in ψ carries the sin²ψ factor exactly.
                let m = shape[0];
                let (cs, wcs) = gauss_legendre(shape[1]);
                let k = shape[2];
                let wphi = 2.0 * PI / k as f64;
                for a in 1..=m {
                    let psi = PI * a as f64 / (m + 1) as f64;
                    let (sp, cp) = psi.sin_cos();
                    let wpsi = PI / (m + 1) as f64 * sp * sp;
                    for (c, wc) in cs.iter().zip(&wcs) {
                        let s = (1.0 - c * c).sqrt();
                        for b in 0..k {
                            let phi = wphi * (b as f64 + 0.5);
                            directions.push(vec![cp, sp * s * phi.cos(), sp * s * phi.sin(), sp * c]);
                            weights.push(wpsi * wc * wphi);
                        }
                    }
                }
            }
        }
        Ok(SphereGrid {
            dimension: n,
            shape: shape.to_vec(),
            directions,
            weights,
        })
    }

    /// Grid from one resolution number: `r` nodes on the circle,
    /// `max(r/16, 8) × max(r/8, 16)` on `S²` and
    /// `max(r/32, 6) × max(r/32, 6) × max(r/16, 12)` on `S³`.
    pub fn build(n: usize, resolution: usize) -> Result<Self> {
        if resolution < 4 {
            return Err(Error::Argument(format!("grid resolution {resolution} is below 4")));
        }
        match n {
            2 => Self::with_shape(2, &[resolution]),
            3 => Self::with_shape(3, &[(resolution / 16).max(8), (resolution / 8).max(16)]),
            4 => Self::with_shape(
                4,
                &[(resolution / 32).max(6), (resolution / 32).max(6), (resolution / 16).max(12)],
            ),
            _ => Err(Error::UnsupportedDimension(n)),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Σ w_a`, the Euclidean area of the sphere.
    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Evaluates `f` at every index in parallel, keeping node order.
pub(crate) fn par_nodes<T, F>(count: usize, context: &'static str, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..count)
        .into_par_iter()
        .map(|a| f(a).map_err(|e| Error::at_node(a, context, e)))
        .collect()
}

/// Per-node radial-gauge data on `I_x`.
#[derive(Debug, Clone, Serialize)]
pub struct IndicatrixNode {
    pub u: Vec<f64>,
    pub rho: f64,
    pub y: Vec<f64>,
    pub sqrt_det_g: f64,
    /// `w_a ρ_aⁿ √det g(x, y_a)`.
    pub weight: f64,
}

/// The indicatrix at `x` discretized on a sphere grid.
#[derive(Debug, Clone, Serialize)]
pub struct IndicatrixSample {
    pub x: Vec<f64>,
    pub nodes: Vec<IndicatrixNode>,
    pub volume: f64,
}

fn sqrt_det(g: &[f64], n: usize) -> Result<f64> {
    let d = crate::tensor::determinant(g, n);
    if !(d > 0.0) {
        return Err(Error::Numerical(format!("det g = {d} is not positive")));
    }
    Ok(d.sqrt())
}

impl IndicatrixSample {
    /// Samples `I(x, λ) = {F = λ}`; `λ = 1` is the indicatrix.
    pub fn at_radius(metric: &FinslerMetric, x: &[f64], grid: &SphereGrid, lambda: f64) -> Result<Self> {
        let n = metric.dimension();
        if grid.dimension != n {
            return Err(Error::Argument(format!(
                "grid dimension {} does not match metric dimension {n}",
                grid.dimension
            )));
        }
        if !(lambda > 0.0) {
            return Err(Error::Argument(format!("sphere radius {lambda} must be positive")));
        }
        let nodes = par_nodes(grid.len(), "indicatrix sample", |a| {
            let u = &grid.directions[a];
            let rho = lambda / metric.f(x, u)?;
            let y: Vec<f64> = u.iter().map(|c| rho * c).collect();
            let g = metric.fundamental_raw(x, &y)?;
            let sd = sqrt_det(&g, n)?;
            Ok(IndicatrixNode {
                u: u.clone(),
                rho,
                weight: grid.weights[a] * rho.powi(n as i32) * sd,
                y,
                sqrt_det_g: sd,
            })
        })?;
        let volume = pairwise_sum(&nodes.iter().map(|v| v.weight).collect::<Vec<_>>());
        Ok(IndicatrixSample {
            x: x.to_vec(),
            nodes,
            volume,
        })
    }

    pub fn new(metric: &FinslerMetric, x: &[f64], grid: &SphereGrid) -> Result<Self> {
        Self::at_radius(metric, x, grid, 1.0)
    }

    /// `Σ_a φ(y_a) W_a` for node values `φ`.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = self.nodes.iter().zip(values).map(|(n, v)| n.weight * v).collect();
        pairwise_sum(&terms)
    }

    /// `(1/vol) Σ_a φ(y_a) W_a`.
    pub fn average_values(&self, values: &[f64]) -> f64 {
        self.integrate_values(values) / self.volume
    }

    /// Node-wise evaluation of an integrand, in parallel and order-preserving.
    pub fn map<T, F>(&self, context: &'static str, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&IndicatrixNode) -> Result<T> + Sync + Send,
    {
        par_nodes(self.nodes.len(), context, |a| f(&self.nodes[a]))
    }
}

/// `∫_{I_x} φ √det g dΩ`.
pub fn integrate<F>(metric: &FinslerMetric, x: &[f64], grid: &SphereGrid, integrand: F) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> Result<f64> + Sync + Send,
{
    let sample = IndicatrixSample::new(metric, x, grid)?;
    let values = sample.map("integrand", |node| integrand(x, &node.y))?;
    Ok(sample.integrate_values(&values))
}

/// `vol(I_x)`.
pub fn volume(metric: &FinslerMetric, x: &[f64], grid: &SphereGrid) -> Result<f64> {
    Ok(IndicatrixSample::new(metric, x, grid)?.volume)
}

/// Both sides of the volume-derivative identity along a direction `b`.
#[derive(Debug, Clone, Serialize)]
pub struct BaoShenCheck {
    pub x: Vec<f64>,
    pub direction: Vec<f64>,
    pub volume: f64,
    /// `b^r ∂vol(I_x)/∂x^r` by Richardson-extrapolated central differences.
    pub lhs: f64,
    /// `−∫ g(tr Ȧ, b) √det g dΩ`.
    pub rhs: f64,
    pub residual: f64,
    pub fd_step: f64,
    pub nodes: usize,
}

/// Richardson-extrapolated central difference of `φ` along `t`.
pub(crate) fn richardson<F>(phi: F, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let d = |h: f64| -> Result<f64> { Ok((phi(h)? - phi(-h)?) / (2.0 * h)) };
    let coarse = d(step)?;
    let fine = d(0.5 * step)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `J_k = g^ij Ȧ_ijk` at every node of the sample.
pub(crate) fn landsberg_trace_nodes(metric: &FinslerMetric, sample: &IndicatrixSample) -> Result<Vec<Vec<f64>>> {
    sample.map("landsberg trace", |node| {
        let geo = Geometry::at(metric, &sample.x, &node.y)?;
        let adot = geo.landsberg();
        Ok(geo.landsberg_trace(&adot).0)
    })
}

pub fn bao_shen_check(
    metric: &FinslerMetric,
    x: &[f64],
    direction: &[f64],
    grid: &SphereGrid,
    fd_step: f64,
) -> Result<BaoShenCheck> {
    let n = metric.dimension();
    if direction.len() != n {
        return Err(Error::Argument(format!("direction must have {n} components")));
    }
    let shifted = |t: f64| -> Result<f64> {
        let z: Vec<f64> = x.iter().zip(direction).map(|(a, b)| a + t * b).collect();
        volume(metric, &z, grid)
    };
    let lhs = richardson(shifted, fd_step)?;
    let sample = IndicatrixSample::new(metric, x, grid)?;
    let j = landsberg_trace_nodes(metric, &sample)?;
    let values: Vec<f64> = j
        .iter()
        .map(|jk| -jk.iter().zip(direction).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let rhs = sample.integrate_values(&values);
    Ok(BaoShenCheck {
        x: x.to_vec(),
        direction: direction.to_vec(),
        volume: sample.volume,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        fd_step,
        nodes: grid.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{Family, MetricSpec};
    use approx::assert_abs_diff_eq;

    fn diag(a: f64, b: f64) -> FinslerMetric {
        FinslerMetric::instantiate(
            &MetricSpec::new(Family::Riemannian, 2)
                .coefficient("a11", &format!("{}", a * a))
                .coefficient("a22", &format!("{}", b * b)),
        )
        .unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert_abs_diff_eq!(s, 2.0 / 13.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn sphere_weight_totals() {
        assert_abs_diff_eq!(SphereGrid::build(2, 256).unwrap().total_weight(), 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(
            SphereGrid::with_shape(3, &[32, 64]).unwrap().total_weight(),
            4.0 * PI,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            SphereGrid::build(4, 256).unwrap().total_weight(),
            2.0 * PI * PI,
            epsilon = 1e-12
        );
        assert!(matches!(SphereGrid::build(5, 64), Err(Error::UnsupportedDimension(5))));
        for grid in [SphereGrid::build(3, 128).unwrap(), SphereGrid::build(4, 256).unwrap()] {
            for u in &grid.directions {
                assert_abs_diff_eq!(u.iter().map(|c| c * c).sum::<f64>(), 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn cos_squared_on_circle() {
        let g = SphereGrid::build(2, 256).unwrap();
        let s: f64 = g.directions.iter().zip(&g.weights).map(|(u, w)| w * u[0] * u[0]).sum();
        assert_abs_diff_eq!(s, PI, epsilon = 1e-12);
    }

    #[test]
    fn ellipse_volume_is_two_pi() {
        let grid = SphereGrid::build(2, 256).unwrap();
        assert_abs_diff_eq!(volume(&FinslerMetric::euclidean(2), &[0.0, 0.0], &grid).unwrap(), 2.0 * PI, epsilon = 1e-12);
        for (a, b) in [(2.0, 3.0), (0.5, 1.7)] {
            let v = volume(&diag(a, b), &[0.0, 0.0], &grid).unwrap();
            assert_abs_diff_eq!(v, 2.0 * PI, epsilon = 1e-10);
        }
    }

    #[test]
    fn radial_gauge_matches_rho_squared_integral() {
        // ∮ (y¹dy² − y²dy¹) = ∫ρ² dθ, the area form of the ellipse times two.
        let m = diag(2.0, 3.0);
        let grid = SphereGrid::build(2, 256).unwrap();
        let s = IndicatrixSample::new(&m, &[0.0, 0.0], &grid).unwrap();
        let rho2: f64 = s.nodes.iter().zip(&grid.weights).map(|(n, w)| n.rho * n.rho * w).sum();
        assert_abs_diff_eq!(rho2, 2.0 * PI / 6.0, epsilon = 1e-12);
        for node in &s.nodes {
            assert_abs_diff_eq!(m.f(&[0.0, 0.0], &node.y).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn three_dimensional_riemannian_volume_is_four_pi() {
        let spec = MetricSpec::new(Family::Riemannian, 3)
            .coefficient("a11", "2")
            .coefficient("a22", "3")
            .coefficient("a33", "0.5")
            .coefficient("a12", "0.3");
        let m = FinslerMetric::instantiate(&spec).unwrap();
        let grid = SphereGrid::with_shape(3, &[32, 64]).unwrap();
        assert_abs_diff_eq!(volume(&m, &[0.0; 3], &grid).unwrap(), 4.0 * PI, epsilon = 1e-8);
    }

    #[test]
    fn node_errors_carry_identity() {
        let grid = SphereGrid::build(2, 16).unwrap();
        // F vanishes on the ray through (−1, 0), which is a grid node.
        let bad = FinslerMetric::instantiate(&MetricSpec::new(Family::Dsl, 2).coefficient("F", "y1 + 2*sqrt(y2^2)")).unwrap();
        match volume(&bad, &[0.0, 0.0], &grid) {
            Err(Error::AtNode { node, .. }) => assert!(node < 16),
            other => panic!("expected a node error, got {other:?}"),
        }
    }

    #[test]
    fn riemannian_bao_shen_both_sides_vanish() {
        let m = FinslerMetric::instantiate(
            &MetricSpec::new(Family::Riemannian, 2)
                .coefficient("a11", "exp(2*x1)")
                .coefficient("a22", "exp(2*x1)"),
        )
        .unwrap();
        let grid = SphereGrid::build(2, 128).unwrap();
        let c = bao_shen_check(&m, &[0.3, 0.1], &[1.0, 0.0], &grid, 1e-4).unwrap();
        assert!(c.lhs.abs() < 1e-8 && c.rhs.abs() < 1e-8, "{c:?}");
    }

    #[test]
    fn randers_bao_shen_sides_agree() {
        let m = FinslerMetric::instantiate(&MetricSpec::new(Family::Randers, 2).coefficient("b1", "0.3*x2")).unwrap();
        let grid = SphereGrid::build(2, 512).unwrap();
        for b in [[1.0, 0.0], [0.0, 1.0]] {
            let c = bao_shen_check(&m, &[0.5, 1.0], &b, &grid, 1e-4).unwrap();
            println!("{c:?}");
            assert!(c.residual <= 1e-4, "{c:?}");
        }
    }
}
